//! Error type shared across data generation, training, and evaluation.

use hint_extract::HintError;
use hlm_model::ModelError;
use tensor_core::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid task spec: {0}")]
    InvalidSpec(String),
    #[error("vocabulary budget {budget} exceeded: generated {got} distinct tokens")]
    VocabBudget { budget: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset holds {got} examples but the task needs {expected}")]
    TaskMismatch { expected: &'static str, got: &'static str },
    #[error("malformed dataset record on line {line}: {source}")]
    MalformedRecord {
        line: usize,
        source: serde_json::Error,
    },
    #[error("evaluation batch is empty")]
    EmptyBatch,
    #[error("evaluation batch is inconsistent: {0}")]
    BatchShape(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Divergence { step: usize, loss: f64 },
    #[error("checkpoint is missing entry {0}")]
    CheckpointEntry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Ingest(#[from] code_ingest::IngestError),
    #[error(transparent)]
    Hint(#[from] HintError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] tensor_core::CheckpointError),
}
