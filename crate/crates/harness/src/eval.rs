//! Dataset-level evaluation wrappers.

use hlm_model::{rank_token_ids, EncodeOptions, Hlm};
use tensor_core::Graph;

use crate::data::Dataset;
use crate::error::HarnessError;
use crate::metrics::{eval_binary, eval_rank, BinaryBatch, EvalBatch, MetricsReport};
use crate::train::{prepare_all, Targets};

/// Rank the full vocabulary for every query and score at cutoffs `ks`.
///
/// Returns the report together with the raw ranked lists.
pub fn eval_rank_dataset(
    model: &Hlm,
    dataset: &Dataset,
    ks: &[usize],
) -> Result<(MetricsReport, EvalBatch), HarnessError> {
    let prepared = prepare_all(model.config(), dataset)?;
    let gold = match &prepared.targets {
        Targets::Ranked(t) => t,
        Targets::Labeled(_) => {
            return Err(HarnessError::TaskMismatch {
                expected: "ranked",
                got: "labeled",
            })
        }
    };
    let mut batch = EvalBatch::default();
    for (doc, &target) in prepared.docs.iter().zip(gold) {
        let g = Graph::new();
        let bound = model.bind(&g);
        let enc = model.encode_document(&g, &bound, doc, &EncodeOptions::default(), &mut None)?;
        let logits = model.recommend_logits(&g, &bound, &enc)?;
        batch.ranked.push(rank_token_ids(g.value(logits).data()));
        batch.gold.push(target);
    }
    let report = eval_rank(&batch, ks)?;
    Ok((report, batch))
}

/// Threshold the classifier at 0.5 and score against gold labels.
pub fn eval_binary_dataset(
    model: &Hlm,
    dataset: &Dataset,
) -> Result<(MetricsReport, BinaryBatch), HarnessError> {
    let prepared = prepare_all(model.config(), dataset)?;
    let gold = match &prepared.targets {
        Targets::Labeled(t) => t,
        Targets::Ranked(_) => {
            return Err(HarnessError::TaskMismatch {
                expected: "labeled",
                got: "ranked",
            })
        }
    };
    let mut batch = BinaryBatch::default();
    for (doc, &label) in prepared.docs.iter().zip(gold) {
        let g = Graph::new();
        let bound = model.bind(&g);
        let enc = model.encode_document(&g, &bound, doc, &EncodeOptions::default(), &mut None)?;
        let prob = g.value(model.classify(&g, &bound, &enc)?).data()[0];
        batch.predicted.push(prob >= 0.5);
        batch.gold.push(label == 1);
    }
    let report = eval_binary(&batch)?;
    Ok((report, batch))
}
