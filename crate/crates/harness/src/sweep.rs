//! Grid sweep over bridge width and retrieval depth.

use hlm_model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::ablation::train_and_eval;
use crate::data::Dataset;
use crate::error::HarnessError;
use crate::metrics::MetricsReport;
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub bridge_tokens: usize,
    pub knn_k: usize,
    pub report: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, bridge_tokens: usize, knn_k: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.bridge_tokens == bridge_tokens && c.knn_k == knn_k)
    }
}

/// The two axes of the sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepGrid<'a> {
    pub bridge_values: &'a [usize],
    pub knn_values: &'a [usize],
}

/// Train one fresh model per `(bridge_tokens, knn_k)` grid cell.
///
/// Each cell goes through the same code path as an ablation run at the same
/// seed, so a cell with `knn_k = 0` reproduces the no-hint ablation exactly.
pub fn run_sweep(
    base: &ModelConfig,
    grid: &SweepGrid<'_>,
    train_ds: &Dataset,
    eval_ds: &Dataset,
    train_cfg: &TrainConfig,
    seed: u64,
    ks: &[usize],
) -> Result<SweepReport, HarnessError> {
    if grid.bridge_values.is_empty() || grid.knn_values.is_empty() {
        return Err(HarnessError::InvalidSpec("sweep grids must be nonempty".into()));
    }
    let mut cells = Vec::with_capacity(grid.bridge_values.len() * grid.knn_values.len());
    for &m in grid.bridge_values {
        for &k in grid.knn_values {
            let mut config = base.clone();
            config.bridge_tokens = m;
            config.knn_k = k;
            let (report, _) = train_and_eval(&config, train_ds, eval_ds, train_cfg, seed, ks)?;
            cells.push(SweepCell {
                bridge_tokens: m,
                knn_k: k,
                report,
            });
        }
    }
    Ok(SweepReport { seed, cells })
}

/// Flatten a sweep report to CSV, one row per cell.
pub fn sweep_csv(report: &SweepReport) -> String {
    let cutoffs: Vec<usize> = report
        .cells
        .first()
        .map(|c| c.report.sr_at.keys().copied().collect())
        .unwrap_or_default();
    let mut out = String::from("bridge_tokens,knn_k,accuracy,mrr");
    for k in &cutoffs {
        out.push_str(&format!(",sr_at_{k}"));
    }
    out.push('\n');
    for cell in &report.cells {
        out.push_str(&format!(
            "{},{},{},{}",
            cell.bridge_tokens,
            cell.knn_k,
            cell.report.accuracy,
            cell.report.mrr.map_or(String::new(), |m| m.to_string()),
        ));
        for k in &cutoffs {
            let v = cell.report.sr_at.get(k).map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
