//! Error type for model construction and document encoding.

use hint_bank::BankError;
use tensor_core::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parameter store is missing {name}")]
    MissingParam { name: String },
    #[error("parameter {name} has shape {got:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: [usize; 2],
        got: [usize; 2],
    },
    #[error("parameter store contains unexpected entry {name}")]
    UnexpectedParam { name: String },
    #[error("document has no content tokens")]
    EmptyDocument,
    #[error("snippet {index} has {got} token ids, expected {expected}")]
    SnippetLen {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("snippet {index} kind annotations cover {got} positions, expected {expected}")]
    KindsLen {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("snippet {index} flags a padding position as a hint")]
    HintOnPad { index: usize },
    #[error("{got} kind rows supplied for {expected} snippets")]
    KindRows { got: usize, expected: usize },
    #[error("{got} frozen banks supplied for {expected} snippets")]
    FrozenLen { got: usize, expected: usize },
    #[error("dropout is active but no rng was supplied")]
    MissingRng,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Bank(#[from] BankError),
}
