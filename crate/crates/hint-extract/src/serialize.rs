use std::io::{BufRead, Write};

use code_ingest::IngestError;

use crate::{HintMask, HintSpan};

/// Write one JSON object per hint: `{"kind","start","end","text"}`.
pub fn write_hint_jsonl<W: Write>(mut w: W, spans: &[HintSpan]) -> Result<(), IngestError> {
    for span in spans {
        serde_json::to_writer(&mut w, span).map_err(std::io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_hint_jsonl<R: BufRead>(r: R) -> Result<Vec<HintSpan>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let span: HintSpan = serde_json::from_str(&line)
            .map_err(|source| IngestError::MalformedRecord { line: i + 1, source })?;
        out.push(span);
    }
    Ok(out)
}

/// Serialize a mask as a JSON array of 0/1 in token order.
pub fn write_mask_json<W: Write>(mut w: W, mask: &HintMask) -> Result<(), IngestError> {
    let bits: Vec<u8> = mask.flags.iter().map(|&f| u8::from(f)).collect();
    serde_json::to_writer(&mut w, &bits).map_err(std::io::Error::other)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{hint_spans, Language};

    #[test]
    fn hint_jsonl_round_trips() {
        let spans = hint_spans("import os\nX = 1\n", Language::Python).unwrap();
        assert!(!spans.is_empty());
        let mut buf = Vec::new();
        write_hint_jsonl(&mut buf, &spans).unwrap();
        let back = read_hint_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, spans);
    }

    #[test]
    fn mask_serializes_as_zero_one() {
        let mask = HintMask { flags: vec![true, false, true] };
        let mut buf = Vec::new();
        write_mask_json(&mut buf, &mask).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "[1,0,1]");
    }
}
