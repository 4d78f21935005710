use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{IngestError, Snippet, Token, TokenSequence};

#[derive(Serialize, Deserialize)]
struct SnippetRecord {
    index: usize,
    ids: Vec<usize>,
    pad: usize,
}

/// Write one JSON object per token: `{"text","start","end","id"}`.
pub fn write_token_jsonl<W: Write>(mut w: W, seq: &TokenSequence) -> Result<(), IngestError> {
    for tok in &seq.tokens {
        serde_json::to_writer(&mut w, tok).map_err(std::io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_token_jsonl<R: BufRead>(r: R) -> Result<TokenSequence, IngestError> {
    let mut tokens = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tok: Token = serde_json::from_str(&line)
            .map_err(|source| IngestError::MalformedRecord { line: i + 1, source })?;
        tokens.push(tok);
    }
    Ok(TokenSequence { tokens })
}

/// Write one JSON object per snippet: `{"index","ids","pad"}`.
pub fn write_snippet_jsonl<W: Write>(mut w: W, snippets: &[Snippet]) -> Result<(), IngestError> {
    for s in snippets {
        let record = SnippetRecord { index: s.index, ids: s.token_ids.clone(), pad: s.pad_count };
        serde_json::to_writer(&mut w, &record).map_err(std::io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Read snippets back; hint flags are not part of the dump and come back `false`.
pub fn read_snippet_jsonl<R: BufRead>(r: R) -> Result<Vec<Snippet>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SnippetRecord = serde_json::from_str(&line)
            .map_err(|source| IngestError::MalformedRecord { line: i + 1, source })?;
        let flags = vec![false; record.ids.len()];
        out.push(Snippet {
            index: record.index,
            token_ids: record.ids,
            pad_count: record.pad,
            hint_flags: flags,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{segment, Tokenizer, Vocab};

    #[test]
    fn token_dump_round_trips() {
        let src = "def f(a, b):\n    return a + b";
        let tok = Tokenizer::new(Vocab::build([src]));
        let seq = tok.tokenize(src);
        let mut buf = Vec::new();
        write_token_jsonl(&mut buf, &seq).unwrap();
        let back = read_token_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn snippet_dump_round_trips_ids_and_pad() {
        let src = "a b c d e";
        let tok = Tokenizer::new(Vocab::build([src]));
        let seq = tok.tokenize(src);
        let snips = segment(&seq, 3, &vec![false; 5]).unwrap();
        let mut buf = Vec::new();
        write_snippet_jsonl(&mut buf, &snips).unwrap();
        let back = read_snippet_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.len(), snips.len());
        for (a, b) in back.iter().zip(&snips) {
            assert_eq!(a.index, b.index);
            assert_eq!(a.token_ids, b.token_ids);
            assert_eq!(a.pad_count, b.pad_count);
        }
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let data = "{\"index\":0,\"ids\":[1],\"pad\":0}\nnot json\n";
        match read_snippet_jsonl(data.as_bytes()) {
            Err(IngestError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed record, got {other:?}"),
        }
    }
}
