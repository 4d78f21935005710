//! Optional capture of forward-pass internals.
//!
//! Diagnostics exist so tests and tooling can check the mechanism from the
//! outside: what the retrieval layer looked up, how the gate mixed the two
//! attention streams, and which key/value rows were banked.

use tensor_core::Matrix;

/// Neighbors one query row attended to, in retrieval order, with the raw
/// scores and the normalized weights the model used.
#[derive(Debug, Clone)]
pub struct RetrievalRow {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
}

/// One head's view of the memory fusion layer.
#[derive(Debug, Clone)]
pub struct HeadFusionDiag {
    /// Sigmoid of the head's gate; `None` when the head bypassed fusion
    /// because nothing was retrievable.
    pub gate: Option<f64>,
    pub local: Matrix,
    /// Retrieved attention rows; `None` on bypass.
    pub retrieved: Option<Matrix>,
    pub fused: Matrix,
    /// Per query row; empty vec on bypass.
    pub rows: Vec<RetrievalRow>,
    /// Softmax rows of the local attention, as computed in the graph.
    pub local_probs: Matrix,
    /// Softmax rows over the retrieved entries, as computed in the graph;
    /// `None` on bypass and in the literal score mode.
    pub retrieved_probs: Option<Matrix>,
}

/// Capture for the layer that touches hint memory.
#[derive(Debug, Clone)]
pub struct FusionDiag {
    pub heads: Vec<HeadFusionDiag>,
}

/// Capture for one snippet's forward pass.
#[derive(Debug, Clone)]
pub struct SnippetDiag {
    /// Input to layer 0 after bridge prepend and position add.
    pub layer_input: Matrix,
    pub fusion: Option<FusionDiag>,
    /// Per-head key and value token rows produced at the memory layer,
    /// before hint masking. Banked entries are the flagged rows of these.
    pub banked_keys: Vec<Matrix>,
    pub banked_values: Vec<Matrix>,
}

/// Captures for a whole document.
#[derive(Debug, Clone, Default)]
pub struct EncodeDiag {
    pub snippets: Vec<SnippetDiag>,
}
