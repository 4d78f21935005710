#![allow(dead_code)]

use harness::{AdamConfig, SyntheticTaskSpec, TaskKind, TrainConfig};
use hlm_model::ModelConfig;

/// Small geometry shared by the training tests: 4 snippets of 12 tokens.
pub fn mini_spec(task: TaskKind, size: usize, seed: u64) -> SyntheticTaskSpec {
    SyntheticTaskSpec {
        task,
        size,
        seed,
        vocab_budget: 512,
        snippet_len: 12,
        num_snippets_range: (4, 4),
    }
}

pub fn mini_model_config() -> ModelConfig {
    ModelConfig {
        vocab_size: 96,
        d_model: 16,
        num_heads: 2,
        num_layers: 2,
        snippet_len: 12,
        max_code_len: 48,
        bridge_tokens: 1,
        knn_k: 2,
        knn_layer: 1,
        dropout: 0.0,
        ..ModelConfig::default()
    }
}

pub fn mini_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 2,
        batch_size: 4,
        adam: AdamConfig {
            lr: 3e-3,
            ..AdamConfig::default()
        },
        seed: 0,
        bptt_window: Some(2),
        overfit_first_batch: false,
        max_steps: None,
        aux_lm_weight: 1.0,
    }
}
