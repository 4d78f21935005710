use serde::{Deserialize, Serialize};

use crate::{IngestError, TokenSequence, PAD_ID};

/// One fixed-length window of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    /// Position of this snippet within its document, starting at 0.
    pub index: usize,
    /// Exactly `snippet_len` ids; the last `pad_count` of them are the pad id.
    pub token_ids: Vec<usize>,
    /// Number of trailing pad positions.
    pub pad_count: usize,
    /// Per-position hint flags; pad positions are always `false`.
    pub hint_flags: Vec<bool>,
}

impl Snippet {
    /// Number of real (non-pad) tokens.
    pub fn content_len(&self) -> usize {
        self.token_ids.len() - self.pad_count
    }
}

/// Keep the first `c_max` tokens of `seq`.
pub fn truncate(seq: &TokenSequence, c_max: usize) -> TokenSequence {
    assert!(c_max >= 1, "token budget must be at least 1");
    TokenSequence { tokens: seq.tokens.iter().take(c_max).cloned().collect() }
}

/// Split `seq` into consecutive snippets of exactly `snippet_len` positions.
///
/// The final snippet is right-padded with [`PAD_ID`]; when the sequence length
/// is an exact multiple of `snippet_len` no extra snippet is produced. An
/// empty sequence still yields one fully padded snippet. `hint_flags` must
/// have one entry per token; flags for pad positions come out `false`.
pub fn segment(
    seq: &TokenSequence,
    snippet_len: usize,
    hint_flags: &[bool],
) -> Result<Vec<Snippet>, IngestError> {
    if snippet_len == 0 {
        return Err(IngestError::ZeroSnippetLen);
    }
    if hint_flags.len() != seq.len() {
        return Err(IngestError::FlagLenMismatch { flags: hint_flags.len(), tokens: seq.len() });
    }
    let total = seq.len();
    let count = usize::max(1, total.div_ceil(snippet_len));
    let mut snippets = Vec::with_capacity(count);
    for index in 0..count {
        let lo = index * snippet_len;
        let hi = usize::min(lo + snippet_len, total);
        let mut token_ids: Vec<usize> = seq.tokens[lo..hi].iter().map(|t| t.id).collect();
        let mut flags: Vec<bool> = hint_flags[lo..hi].to_vec();
        let pad_count = snippet_len - token_ids.len();
        token_ids.resize(snippet_len, PAD_ID);
        flags.resize(snippet_len, false);
        snippets.push(Snippet { index, token_ids, pad_count, hint_flags: flags });
    }
    Ok(snippets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Tokenizer, Vocab};

    fn seq_of(n: usize) -> TokenSequence {
        let src: String = (0..n).map(|i| format!("t{i} ")).collect();
        let tok = Tokenizer::new(Vocab::build([src.as_str()]));
        tok.tokenize(&src)
    }

    #[test]
    fn truncate_keeps_a_prefix() {
        let seq = seq_of(10);
        let cut = truncate(&seq, 4);
        assert_eq!(cut.len(), 4);
        assert_eq!(cut.tokens[..], seq.tokens[..4]);
        assert_eq!(truncate(&seq, 100).len(), 10);
    }

    #[test]
    fn exact_multiple_has_no_padding() {
        let seq = seq_of(8);
        let snips = segment(&seq, 4, &vec![false; 8]).unwrap();
        assert_eq!(snips.len(), 2);
        assert!(snips.iter().all(|s| s.pad_count == 0));
        let flat: Vec<usize> = snips.iter().flat_map(|s| s.token_ids.clone()).collect();
        assert_eq!(flat, seq.ids());
    }

    #[test]
    fn remainder_is_right_padded() {
        let seq = seq_of(5);
        let snips = segment(&seq, 4, &vec![true; 5]).unwrap();
        assert_eq!(snips.len(), 2);
        assert_eq!(snips[1].pad_count, 3);
        assert_eq!(&snips[1].token_ids[1..], &[PAD_ID, PAD_ID, PAD_ID]);
        assert_eq!(snips[1].hint_flags, vec![true, false, false, false]);
    }

    #[test]
    fn empty_sequence_yields_one_padded_snippet() {
        let seq = TokenSequence::default();
        let snips = segment(&seq, 3, &[]).unwrap();
        assert_eq!(snips.len(), 1);
        assert_eq!(snips[0].pad_count, 3);
        assert_eq!(snips[0].token_ids, vec![PAD_ID; 3]);
    }

    #[test]
    fn zero_snippet_len_is_rejected() {
        let seq = seq_of(2);
        assert!(matches!(segment(&seq, 0, &[false, false]), Err(IngestError::ZeroSnippetLen)));
    }

    #[test]
    fn flag_length_mismatch_is_rejected() {
        let seq = seq_of(3);
        assert!(matches!(
            segment(&seq, 2, &[false, false]),
            Err(IngestError::FlagLenMismatch { flags: 2, tokens: 3 })
        ));
    }
}
