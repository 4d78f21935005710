//! Model hyperparameters and their validation.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// How retrieved attention scores are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KnnScoreMode {
    /// One softmax over all retrieved neighbors of a query row.
    #[default]
    Joint,
    /// Each neighbor normalized alone. A softmax over a single score is 1, so
    /// every retrieved value contributes wholesale and the scores carry no
    /// gradient; kept selectable for comparison runs.
    PerNeighborLiteral,
}

/// Hyperparameters for the dual-memory encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub num_heads: usize,
    pub num_layers: usize,
    /// Tokens per snippet (L).
    pub snippet_len: usize,
    /// Document truncation length in tokens.
    pub max_code_len: usize,
    /// Bridge rows prepended to each snippet (m). Zero disables the bridge.
    pub bridge_tokens: usize,
    /// Neighbors retrieved per query row (K). Zero disables hint memory.
    pub knn_k: usize,
    /// Zero-based index of the layer that reads and writes hint memory.
    pub knn_layer: usize,
    pub dropout: f64,
    pub knn_score_mode: KnnScoreMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 512,
            d_model: 64,
            num_heads: 4,
            num_layers: 4,
            snippet_len: 32,
            max_code_len: 256,
            bridge_tokens: 1,
            knn_k: 32,
            knn_layer: 2,
            dropout: 0.0,
            knn_score_mode: KnnScoreMode::Joint,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.vocab_size < 2 {
            return fail(format!("vocab_size {} < 2", self.vocab_size));
        }
        if self.d_model == 0 || self.num_heads == 0 {
            return fail("d_model and num_heads must be positive".into());
        }
        if !self.d_model.is_multiple_of(self.num_heads) {
            return fail(format!(
                "d_model {} not divisible by num_heads {}",
                self.d_model, self.num_heads
            ));
        }
        if self.num_layers == 0 {
            return fail("num_layers must be positive".into());
        }
        if self.snippet_len == 0 {
            return fail("snippet_len must be positive".into());
        }
        if self.max_code_len == 0 {
            return fail("max_code_len must be positive".into());
        }
        if self.knn_layer >= self.num_layers {
            return fail(format!(
                "knn_layer {} out of range for {} layers",
                self.knn_layer, self.num_layers
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.num_heads
    }

    /// Rows per snippet once bridge rows are prepended.
    pub fn span_rows(&self) -> usize {
        self.bridge_tokens + self.snippet_len
    }
}
