use thiserror::Error;

/// Errors produced while turning raw sources into snippets.
#[derive(Debug, Error)]
pub enum IngestError {
    /// The input byte stream is not valid UTF-8; `offset` is the first bad byte.
    #[error("invalid utf-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    /// Snippet length must be at least one token.
    #[error("snippet length must be at least 1")]
    ZeroSnippetLen,

    /// A per-token flag vector does not line up with the token sequence.
    #[error("flag vector has length {flags} but the sequence has {tokens} tokens")]
    FlagLenMismatch { flags: usize, tokens: usize },

    /// A serialized vocabulary did not start with the reserved tokens.
    #[error("vocabulary is missing reserved pad/oov entries")]
    MalformedVocab,

    /// A serialized record could not be parsed.
    #[error("malformed record on line {line}: {source}")]
    MalformedRecord {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
