use code_ingest::TokenSequence;
use serde::{Deserialize, Serialize};

use crate::{HintKind, HintSpan};

/// Per-token hint indicator aligned with a [`TokenSequence`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintMask {
    pub flags: Vec<bool>,
}

impl HintMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Mark every token whose byte span intersects at least one hint span.
pub fn build_mask(spans: &[HintSpan], seq: &TokenSequence) -> HintMask {
    let mut flags = vec![false; seq.len()];
    for span in spans {
        for i in overlapping_tokens(span, seq) {
            flags[i] = true;
        }
    }
    HintMask { flags }
}

/// Per-token hint category: the kind of the first overlapping span, if any.
pub fn token_kinds(spans: &[HintSpan], seq: &TokenSequence) -> Vec<Option<HintKind>> {
    let mut kinds = vec![None; seq.len()];
    for span in spans {
        for i in overlapping_tokens(span, seq) {
            if kinds[i].is_none() {
                kinds[i] = Some(span.kind);
            }
        }
    }
    kinds
}

fn overlapping_tokens(span: &HintSpan, seq: &TokenSequence) -> std::ops::Range<usize> {
    // Tokens are ordered by byte span, so the overlap set is contiguous.
    let first = seq.tokens.partition_point(|t| t.end <= span.start);
    let last = seq.tokens.partition_point(|t| t.start < span.end);
    first..last.max(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{hint_spans, Language};
    use code_ingest::{Tokenizer, Vocab};

    #[test]
    fn mask_marks_exactly_the_hint_tokens() {
        let src = "import os\nrun(x, 1)\nMAX = 2\n";
        let tok = Tokenizer::new(Vocab::build([src]));
        let seq = tok.tokenize(src);
        let spans = hint_spans(src, Language::Python).unwrap();
        let mask = build_mask(&spans, &seq);
        let marked: Vec<&str> = seq
            .tokens
            .iter()
            .zip(&mask.flags)
            .filter(|(_, &f)| f)
            .map(|(t, _)| t.text.as_str())
            .collect();
        assert_eq!(marked, ["import", "os", "MAX", "=", "2"]);
    }

    #[test]
    fn partial_byte_overlap_marks_the_token() {
        let seq = Tokenizer::new(Vocab::build(["abc def"])).tokenize("abc def");
        let span = HintSpan { kind: HintKind::LineComment, start: 2, end: 5, text: "c d".into() };
        let mask = build_mask(&[span], &seq);
        assert_eq!(mask.flags, vec![true, true]);
    }

    #[test]
    fn kinds_follow_first_overlapping_span() {
        let src = "import os\nMAX = 1\nplain\n";
        let seq = Tokenizer::new(Vocab::build([src])).tokenize(src);
        let spans = hint_spans(src, Language::Python).unwrap();
        let kinds = token_kinds(&spans, &seq);
        assert_eq!(kinds[0], Some(HintKind::ImportStatement));
        assert_eq!(kinds[2], Some(HintKind::FieldDefinition));
        assert_eq!(kinds[5], None);
    }

    #[test]
    fn empty_spans_give_an_all_false_mask() {
        let seq = Tokenizer::new(Vocab::build(["a b"])).tokenize("a b");
        let mask = build_mask(&[], &seq);
        assert_eq!(mask.flags, vec![false, false]);
        assert_eq!(mask.count(), 0);
    }
}
