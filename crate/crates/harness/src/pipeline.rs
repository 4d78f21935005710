//! Source-to-model input pipeline.
//!
//! Tokenize, truncate to the document budget, extract hint spans from the
//! untruncated source, project them onto the surviving tokens, and segment
//! into fixed-length snippets. Mask flags and per-token kinds come from the
//! same span overlap test, so a flagged position always carries a kind.

use code_ingest::{segment, truncate, Tokenizer};
use hint_extract::{build_mask, hint_spans, token_kinds, Language};
use hlm_model::DocumentInput;

use crate::error::HarnessError;

/// Everything `prepare_document` needs besides the source text.
pub struct Pipeline {
    pub tokenizer: Tokenizer,
    pub language: Language,
    /// Snippet length in tokens.
    pub snippet_len: usize,
    /// Document token budget; longer sources are truncated.
    pub max_code_len: usize,
}

impl Pipeline {
    pub fn prepare(&self, doc_id: &str, source: &str) -> Result<DocumentInput, HarnessError> {
        let seq = truncate(&self.tokenizer.tokenize(source), self.max_code_len);
        let spans = hint_spans(source, self.language)?;
        let mask = build_mask(&spans, &seq);
        let kinds = token_kinds(&spans, &seq);
        let snippets = segment(&seq, self.snippet_len, &mask.flags)?;
        Ok(DocumentInput::from_flat_kinds(
            doc_id.to_string(),
            snippets,
            &kinds,
        ))
    }
}
