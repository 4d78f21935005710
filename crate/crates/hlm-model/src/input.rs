//! Per-document model input: segmented snippets plus hint kind annotations.

use code_ingest::Snippet;
use hint_extract::HintKind;

/// One document ready for encoding. `kinds` runs parallel to each snippet's
/// positions: `Some(kind)` exactly where the snippet's hint flag is set.
#[derive(Debug, Clone)]
pub struct DocumentInput {
    pub doc_id: String,
    pub snippets: Vec<Snippet>,
    pub kinds: Vec<Vec<Option<HintKind>>>,
}

impl DocumentInput {
    /// Splits a flat, document-order kind sequence (one entry per content
    /// token) across the snippets, filling padding positions with `None`.
    pub fn from_flat_kinds(
        doc_id: impl Into<String>,
        snippets: Vec<Snippet>,
        flat_kinds: &[Option<HintKind>],
    ) -> Self {
        let mut kinds = Vec::with_capacity(snippets.len());
        let mut offset = 0;
        for snippet in &snippets {
            let content = snippet.content_len();
            let mut row: Vec<Option<HintKind>> = Vec::with_capacity(snippet.token_ids.len());
            row.extend(
                flat_kinds[offset..(offset + content).min(flat_kinds.len())]
                    .iter()
                    .copied(),
            );
            row.resize(snippet.token_ids.len(), None);
            offset += content;
            kinds.push(row);
        }
        Self {
            doc_id: doc_id.into(),
            snippets,
            kinds,
        }
    }

    /// Annotates every flagged position with one fixed kind. Convenient for
    /// synthetic inputs where the kind does not matter.
    pub fn with_uniform_kind(
        doc_id: impl Into<String>,
        snippets: Vec<Snippet>,
        kind: HintKind,
    ) -> Self {
        let kinds = snippets
            .iter()
            .map(|s| {
                s.hint_flags
                    .iter()
                    .map(|&f| if f { Some(kind) } else { None })
                    .collect()
            })
            .collect();
        Self {
            doc_id: doc_id.into(),
            snippets,
            kinds,
        }
    }

    pub fn num_snippets(&self) -> usize {
        self.snippets.len()
    }
}
