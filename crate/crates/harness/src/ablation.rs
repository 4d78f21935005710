//! Memory ablations: full model, no bridge, no hint retrieval.

use hlm_model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::HarnessError;
use crate::eval::{eval_binary_dataset, eval_rank_dataset};
use crate::metrics::MetricsReport;
use crate::train::{train, LossPoint, TrainConfig, TrainState};

/// A named model configuration entering the comparison.
#[derive(Clone, Debug)]
pub struct AblationVariant {
    pub name: &'static str,
    pub config: ModelConfig,
}

/// The three standard variants derived from `base`.
pub fn ablation_variants(base: &ModelConfig) -> Vec<AblationVariant> {
    let mut no_bridge = base.clone();
    no_bridge.bridge_tokens = 0;
    let mut no_hint = base.clone();
    no_hint.knn_k = 0;
    vec![
        AblationVariant {
            name: "full",
            config: base.clone(),
        },
        AblationVariant {
            name: "no_bridge",
            config: no_bridge,
        },
        AblationVariant {
            name: "no_hint",
            config: no_hint,
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub report: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub name: String,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub runs: Vec<RunResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub variants: Vec<VariantSummary>,
}

/// Train a fresh model and evaluate it on the held-out split.
///
/// `seed` drives initialization, shuffling, and dropout together, so one
/// number pins the whole run. The task flavor comes from the datasets.
pub fn train_and_eval(
    config: &ModelConfig,
    train_ds: &Dataset,
    eval_ds: &Dataset,
    train_cfg: &TrainConfig,
    seed: u64,
    ks: &[usize],
) -> Result<(MetricsReport, Vec<LossPoint>), HarnessError> {
    let mut cfg = train_cfg.clone();
    cfg.seed = seed;
    let mut state = TrainState::fresh(config.clone(), seed, cfg.adam)?;
    let curve = train(&mut state, train_ds, &cfg, None)?;
    let report = if eval_ds.task.is_ranked() {
        eval_rank_dataset(&state.model, eval_ds, ks)?.0
    } else {
        eval_binary_dataset(&state.model, eval_ds)?.0
    };
    Ok((report, curve))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Train and evaluate every variant across `seeds`.
pub fn run_ablation(
    base: &ModelConfig,
    train_ds: &Dataset,
    eval_ds: &Dataset,
    train_cfg: &TrainConfig,
    seeds: &[u64],
    ks: &[usize],
) -> Result<AblationReport, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::InvalidSpec("need at least one seed".into()));
    }
    let mut variants = Vec::new();
    for variant in ablation_variants(base) {
        let mut runs = Vec::new();
        for &seed in seeds {
            let (report, _) = train_and_eval(&variant.config, train_ds, eval_ds, train_cfg, seed, ks)?;
            runs.push(RunResult { seed, report });
        }
        let acc: Vec<f64> = runs.iter().map(|r| r.report.accuracy).collect();
        let (mean_accuracy, sd_accuracy) = mean_sd(&acc);
        variants.push(VariantSummary {
            name: variant.name.to_string(),
            mean_accuracy,
            sd_accuracy,
            runs,
        });
    }
    Ok(AblationReport { variants })
}
