//! Ranking and classification metrics.
//!
//! Success@k counts queries whose gold id appears in the top k of the ranked
//! list. MRR averages reciprocal ranks, contributing 0 for a query whose gold
//! id is absent. Binary accuracy, precision, recall, and F1 follow the usual
//! confusion-matrix definitions; a ratio with a zero denominator is reported
//! as 0 rather than NaN.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Ranked predictions for a batch of retrieval queries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalBatch {
    /// One ranked candidate list per query, best first.
    pub ranked: Vec<Vec<usize>>,
    /// Gold token id per query.
    pub gold: Vec<usize>,
}

/// Thresholded predictions for a batch of binary classifications.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BinaryBatch {
    pub predicted: Vec<bool>,
    pub gold: Vec<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Success rate at each requested cutoff.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sr_at: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrr: Option<f64>,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

/// Score a batch of ranked lists at the given cutoffs.
///
/// `accuracy` in the report equals success at rank 1 whether or not 1 appears
/// in `ks`. Cutoffs of 0 are rejected.
pub fn eval_rank(batch: &EvalBatch, ks: &[usize]) -> Result<MetricsReport, HarnessError> {
    if batch.ranked.is_empty() {
        return Err(HarnessError::EmptyBatch);
    }
    if batch.ranked.len() != batch.gold.len() {
        return Err(HarnessError::BatchShape(format!(
            "{} ranked lists but {} gold ids",
            batch.ranked.len(),
            batch.gold.len()
        )));
    }
    if ks.contains(&0) {
        return Err(HarnessError::BatchShape("cutoff k must be positive".into()));
    }
    let n = batch.ranked.len() as f64;
    let positions: Vec<Option<usize>> = batch
        .ranked
        .iter()
        .zip(&batch.gold)
        .map(|(list, gold)| list.iter().position(|id| id == gold))
        .collect();
    let mut sr_at = BTreeMap::new();
    for &k in ks {
        let hits = positions.iter().filter(|p| matches!(p, Some(r) if *r < k)).count();
        sr_at.insert(k, hits as f64 / n);
    }
    let mrr = positions
        .iter()
        .map(|p| p.map_or(0.0, |r| 1.0 / (r as f64 + 1.0)))
        .sum::<f64>()
        / n;
    let top1 = positions.iter().filter(|p| matches!(p, Some(0))).count();
    Ok(MetricsReport {
        sr_at,
        mrr: Some(mrr),
        accuracy: top1 as f64 / n,
        precision: None,
        recall: None,
        f1: None,
    })
}

/// Score a batch of binary predictions against gold labels.
pub fn eval_binary(batch: &BinaryBatch) -> Result<MetricsReport, HarnessError> {
    if batch.predicted.is_empty() {
        return Err(HarnessError::EmptyBatch);
    }
    if batch.predicted.len() != batch.gold.len() {
        return Err(HarnessError::BatchShape(format!(
            "{} predictions but {} gold labels",
            batch.predicted.len(),
            batch.gold.len()
        )));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fal_n = 0usize;
    for (&p, &g) in batch.predicted.iter().zip(&batch.gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fal_n += 1,
        }
    }
    let n = batch.predicted.len() as f64;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fal_n);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricsReport {
        sr_at: BTreeMap::new(),
        mrr: None,
        accuracy: (tp + tn) as f64 / n,
        precision: Some(precision),
        recall: Some(recall),
        f1: Some(f1),
    })
}
