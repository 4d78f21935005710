//! Deterministic minibatch training with per-epoch checkpoints.
//!
//! Every random choice draws from a stream derived from the seed and the
//! epoch number, never from global state, so a run can be reproduced bit for
//! bit and a resumed run continues exactly where the checkpointed one left
//! off. Gradients are averaged over the batch in example order.

use std::fs;
use std::path::Path;

use hint_extract::Language;
use hlm_model::{DocumentInput, EncodeOptions, Hlm, ModelConfig, ParamStore};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use code_ingest::Tokenizer;
use serde::{Deserialize, Serialize};
use tensor_core::{read_checkpoint, write_checkpoint, Graph, Matrix, NamedArray};

use crate::data::Dataset;
use crate::error::HarnessError;
use crate::gen::example_rng;
use crate::optim::{Adam, AdamConfig};
use crate::pipeline::Pipeline;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Seed for shuffling and dropout; model init carries its own seed.
    pub seed: u64,
    /// Detach interval for the bridge chain.
    pub bptt_window: Option<usize>,
    /// Train on the first batch only, one step per epoch. Debugging aid.
    pub overfit_first_batch: bool,
    /// Stop after this many optimizer steps regardless of epochs.
    pub max_steps: Option<usize>,
    /// Weight of the next-token prediction loss added to the task loss.
    ///
    /// The task loss alone touches one position per document, which is too
    /// sparse to train an encoder from scratch. Predicting every following
    /// token densifies the signal and trains the copy circuits retrieval
    /// relies on; the snippet-boundary term is the only per-position loss
    /// that reaches the bridge directly.
    pub aux_lm_weight: f64,
    /// Epochs at the start trained on the prediction loss alone.
    ///
    /// Retrieval can only learn against representations that hold still; a
    /// language-model-only warmup settles the banked keys and values before
    /// the task loss starts shaping retrieval, standing in for the
    /// pretrained backbone this mechanism normally rides on.
    pub pretrain_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            batch_size: 4,
            adam: AdamConfig::default(),
            seed: 0,
            bptt_window: Some(2),
            overfit_first_batch: false,
            max_steps: None,
            aux_lm_weight: 1.0,
            pretrain_epochs: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
}

/// Model, optimizer, and progress markers; the unit of checkpointing.
pub struct TrainState {
    pub model: Hlm,
    pub optim: Adam,
    /// First epoch the next `train` call will run.
    pub next_epoch: usize,
    /// Optimizer steps taken so far.
    pub step: usize,
}

impl TrainState {
    pub fn fresh(config: ModelConfig, seed: u64, adam: AdamConfig) -> Result<Self, HarnessError> {
        Ok(Self {
            model: Hlm::new(config, seed)?,
            optim: Adam::new(adam),
            next_epoch: 0,
            step: 0,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut arrays = self.model.params().to_named_arrays();
        arrays.extend(self.optim.to_named_arrays());
        arrays.push(NamedArray::new(
            "train.progress",
            [1, 2],
            vec![self.next_epoch as f64, self.step as f64],
        ));
        write_checkpoint(path, &arrays)?;
        Ok(())
    }

    pub fn load(
        path: &Path,
        config: &ModelConfig,
        adam: AdamConfig,
    ) -> Result<Self, HarnessError> {
        let mut params = Vec::new();
        let mut optim = Vec::new();
        let mut progress = None;
        for a in read_checkpoint(path)? {
            if a.name == "train.progress" {
                progress = Some((a.data[0] as usize, a.data[1] as usize));
            } else if a.name.starts_with("optim.") {
                optim.push(a);
            } else {
                params.push(a);
            }
        }
        let (next_epoch, step) =
            progress.ok_or_else(|| HarnessError::CheckpointEntry("train.progress".into()))?;
        Ok(Self {
            model: Hlm::from_store(config.clone(), ParamStore::from_named_arrays(params)?)?,
            optim: Adam::from_named_arrays(adam, &optim)?,
            next_epoch,
            step,
        })
    }
}

/// Documents and targets with all parsing and tokenization done.
pub(crate) struct Prepared {
    pub docs: Vec<DocumentInput>,
    pub targets: Targets,
}

pub(crate) enum Targets {
    Ranked(Vec<usize>),
    Labeled(Vec<u8>),
}

/// Run every example through the source pipeline once, up front.
pub(crate) fn prepare_all(
    config: &ModelConfig,
    dataset: &Dataset,
) -> Result<Prepared, HarnessError> {
    if dataset.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    if dataset.vocab.len() > config.vocab_size {
        return Err(HarnessError::InvalidSpec(format!(
            "dataset vocabulary has {} entries but the model only embeds {}",
            dataset.vocab.len(),
            config.vocab_size
        )));
    }
    let pipeline = Pipeline {
        tokenizer: Tokenizer::new(dataset.vocab.clone()),
        language: Language::Python,
        snippet_len: config.snippet_len,
        max_code_len: config.max_code_len,
    };
    let mut docs = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        docs.push(pipeline.prepare(&format!("doc-{i:05}"), dataset.source(i))?);
    }
    let targets = match &dataset.examples {
        crate::data::Examples::Ranked(v) => {
            Targets::Ranked(v.iter().map(|e| e.target_id).collect())
        }
        crate::data::Examples::Labeled(v) => {
            Targets::Labeled(v.iter().map(|e| e.label).collect())
        }
    };
    Ok(Prepared { docs, targets })
}

/// Train for the configured epochs, mutating `state` in place.
///
/// Returns one loss point per optimizer step. When `ckpt_dir` is given, the
/// full state is written there after every epoch as `epoch-NNN.ckpt`. A
/// non-finite example loss aborts with [`HarnessError::Divergence`] before
/// it can touch the parameters.
pub fn train(
    state: &mut TrainState,
    dataset: &Dataset,
    cfg: &TrainConfig,
    ckpt_dir: Option<&Path>,
) -> Result<Vec<LossPoint>, HarnessError> {
    if cfg.batch_size == 0 {
        return Err(HarnessError::InvalidSpec("batch_size must be positive".into()));
    }
    let prepared = prepare_all(state.model.config(), dataset)?;
    let n = prepared.docs.len();
    let mut curve = Vec::new();
    'epochs: for epoch in state.next_epoch..cfg.epochs {
        let order: Vec<usize> = if cfg.overfit_first_batch {
            (0..n.min(cfg.batch_size)).collect()
        } else {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut example_rng(cfg.seed, epoch, "order"));
            idx
        };
        let mut dropout_rng = example_rng(cfg.seed, epoch, "dropout");
        for batch in order.chunks(cfg.batch_size) {
            if cfg.max_steps.is_some_and(|max| state.step >= max) {
                break 'epochs;
            }
            let loss = train_step(state, &prepared, batch, cfg, &mut dropout_rng)?;
            state.step += 1;
            curve.push(LossPoint {
                step: state.step,
                epoch,
                loss,
            });
        }
        state.next_epoch = epoch + 1;
        if let Some(dir) = ckpt_dir {
            fs::create_dir_all(dir)?;
            state.save(&dir.join(format!("epoch-{:03}.ckpt", epoch + 1)))?;
        }
    }
    Ok(curve)
}

/// Mean next-token cross entropy per snippet, averaged over snippets.
///
/// Within a snippet each content row predicts the following token; the last
/// content row of every snippet but the final one predicts the first token
/// of the next snippet, a hop only the bridge can see. The final content
/// position has no target here; the task loss owns it.
fn aux_lm_loss(
    g: &Graph,
    bound: &hlm_model::BoundParams,
    enc: &hlm_model::DocumentEncoding,
    doc: &DocumentInput,
) -> Result<Option<tensor_core::Tensor>, HarnessError> {
    let mut terms = Vec::new();
    for (i, snippet) in doc.snippets.iter().enumerate() {
        let content = snippet.content_len();
        if content == 0 {
            continue;
        }
        let mut targets: Vec<usize> = snippet.token_ids[1..content].to_vec();
        if let Some(next) = doc.snippets.get(i + 1) {
            if next.content_len() > 0 {
                targets.push(next.token_ids[0]);
            }
        }
        if targets.is_empty() {
            continue;
        }
        let rows = g.slice_rows(enc.snippet_hidden[i], 0, targets.len())?;
        let logits = g.add_bias(
            g.matmul(rows, bound.get("head.out.w"))?,
            bound.get("head.out.b"),
        )?;
        terms.push(g.cross_entropy(logits, &targets)?);
    }
    let count = terms.len();
    let mut iter = terms.into_iter();
    let Some(mut sum) = iter.next() else {
        return Ok(None);
    };
    for term in iter {
        sum = g.add(sum, term)?;
    }
    Ok(Some(g.affine(sum, 1.0 / count as f64, 0.0)))
}

fn train_step(
    state: &mut TrainState,
    prepared: &Prepared,
    batch: &[usize],
    cfg: &TrainConfig,
    dropout_rng: &mut ChaCha20Rng,
) -> Result<f64, HarnessError> {
    let model = &state.model;
    let scale = 1.0 / batch.len() as f64;
    let mut acc: Vec<(String, Matrix)> = model
        .params()
        .iter()
        .map(|(name, m)| {
            let (r, c) = m.shape();
            (name.to_string(), Matrix::zeros(r, c))
        })
        .collect();
    let mut total = 0.0;
    for &i in batch {
        let g = Graph::new();
        let bound = model.bind(&g);
        let opts = EncodeOptions {
            training: true,
            bptt_window: cfg.bptt_window,
            ..EncodeOptions::default()
        };
        let mut rng: Option<&mut dyn rand::RngCore> = if model.config().dropout > 0.0 {
            Some(dropout_rng)
        } else {
            None
        };
        let enc = model.encode_document(&g, &bound, &prepared.docs[i], &opts, &mut rng)?;
        let task_t = match &prepared.targets {
            Targets::Ranked(t) => {
                let logits = model.recommend_logits(&g, &bound, &enc)?;
                g.cross_entropy(logits, &[t[i]])?
            }
            Targets::Labeled(t) => {
                let prob = model.classify(&g, &bound, &enc)?;
                g.binary_cross_entropy(prob, f64::from(t[i]))?
            }
        };
        let loss_t = if cfg.aux_lm_weight > 0.0 {
            match aux_lm_loss(&g, &bound, &enc, &prepared.docs[i])? {
                Some(aux) => g.add(task_t, g.affine(aux, cfg.aux_lm_weight, 0.0))?,
                None => task_t,
            }
        } else {
            task_t
        };
        let loss = g.value(loss_t).data()[0];
        if !loss.is_finite() {
            return Err(HarnessError::Divergence {
                step: state.step + 1,
                loss,
            });
        }
        g.backward(loss_t)?;
        for ((_, slot), (_, grad)) in acc.iter_mut().zip(model.gradients(&g, &bound)) {
            let s = slot.data_mut();
            for (j, v) in grad.data().iter().enumerate() {
                s[j] += scale * v;
            }
        }
        total += scale * loss;
    }
    state.optim.update(state.model.params_mut(), &acc)?;
    Ok(total)
}
