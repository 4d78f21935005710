//! The dual-memory encoder.
//!
//! A document is encoded snippet by snippet. Bridge rows prepended to each
//! snippet carry state forward: the final-layer bridge output of snippet i
//! becomes part of the layer-0 input of snippet i+1. One designated layer
//! additionally reads hint memory: each query row retrieves its top-K
//! key/value pairs from a per-document bank, attends over them, and a learned
//! per-head gate mixes that stream with ordinary local attention. After a
//! snippet's forward pass, the key/value rows of its hint-flagged positions
//! are written to the bank, detached, for later snippets to retrieve.

use code_ingest::Snippet;
use hint_bank::HintBank;
use hint_extract::HintKind;
use rand::RngCore;
use tensor_core::{Graph, Matrix, Tensor};

use std::collections::HashMap;

use crate::config::{KnnScoreMode, ModelConfig};
use crate::diag::{EncodeDiag, FusionDiag, HeadFusionDiag, RetrievalRow, SnippetDiag};
use crate::error::ModelError;
use crate::input::DocumentInput;
use crate::params::ParamStore;

/// Additive score for masked (padding) key columns.
pub const ATTN_MASK_VALUE: f64 = -1e30;

/// Parameters registered on a graph as gradient-tracked leaves.
pub struct BoundParams {
    entries: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl BoundParams {
    /// Looks up a bound parameter. Names follow the store layout; asking for
    /// a parameter the config does not produce is a programming error.
    pub fn get(&self, name: &str) -> Tensor {
        match self.index.get(name) {
            Some(&i) => self.entries[i].1,
            None => panic!("parameter {name} is not bound"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), *t))
    }
}

/// How a snippet's forward pass sees hint memory.
pub enum BankMode<'a> {
    /// Retrieval reads the bank; flagged rows are written back afterwards.
    Live(&'a mut HintBank),
    /// Retrieval reads a fixed bank; nothing is written. Used to replay a
    /// recorded run, e.g. for gradient checks against the live pass.
    Frozen(&'a HintBank),
    /// Hint memory disabled; the fusion layer passes local attention through.
    Off,
}

/// Per-snippet forward inputs beyond the snippet itself.
pub struct SnippetContext<'a> {
    pub bridge_in: Option<Tensor>,
    pub bank: BankMode<'a>,
    pub training: bool,
    pub capture: bool,
}

/// Result of one snippet's forward pass.
pub struct SnippetForward {
    /// Final-layer token rows, `[snippet_len, d_model]`.
    pub hidden: Tensor,
    /// Final-layer bridge rows, `[bridge_tokens, d_model]`; `None` when the
    /// bridge is disabled.
    pub bridge_out: Option<Tensor>,
    pub diag: Option<SnippetDiag>,
}

/// Document encoding options.
#[derive(Debug, Clone, Copy, Default)]
pub struct EncodeOptions<'a> {
    /// Enables dropout (an rng must then be supplied if the rate is nonzero).
    pub training: bool,
    /// Detach the bridge every this many snippets (truncated backprop).
    /// `None` or `Some(0)` backpropagates through the whole chain.
    pub bptt_window: Option<usize>,
    /// Replay against these pre-snippet bank states instead of building a
    /// live bank; one per snippet.
    pub frozen_banks: Option<&'a [HintBank]>,
    /// Record a clone of the bank as each snippet saw it.
    pub record_bank_snapshots: bool,
    /// Capture forward internals.
    pub capture: bool,
}

/// Everything `encode_document` produces.
pub struct DocumentEncoding {
    /// Final-layer token rows per snippet.
    pub snippet_hidden: Vec<Tensor>,
    /// Mean over each snippet's non-padding rows, `[1, d_model]`.
    pub snippet_means: Vec<Tensor>,
    /// Bridge rows after the last snippet.
    pub bridge_final: Option<Tensor>,
    /// `[1, 2 * d_model]`: document-level half next to the final snippet
    /// mean. The document half is the bridge mean, or the mean of snippet
    /// means when the bridge is disabled.
    pub pooled: Tensor,
    /// (snippet index, row) of the last content token.
    pub last_position: (usize, usize),
    /// Final bank state (live runs) or a clone of the last replayed state.
    pub bank: HintBank,
    pub bank_snapshots: Option<Vec<HintBank>>,
    pub diag: Option<EncodeDiag>,
}

/// Token ids ranked by descending logit; equal logits rank lower ids first.
pub fn rank_token_ids(logits: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..logits.len()).collect();
    ids.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    ids
}

fn maybe_dropout(
    g: &Graph,
    t: Tensor,
    active: bool,
    rate: f64,
    rng: &mut Option<&mut dyn RngCore>,
) -> Result<Tensor, ModelError> {
    if !active || rate == 0.0 {
        return Ok(t);
    }
    let rng = rng.as_deref_mut().ok_or(ModelError::MissingRng)?;
    Ok(g.dropout(t, rate, rng)?)
}

fn submatrix(src: &Matrix, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
    let mut out = Matrix::zeros(r1 - r0, c1 - c0);
    for r in r0..r1 {
        for c in c0..c1 {
            out.set(r - r0, c - c0, src.get(r, c));
        }
    }
    out
}

/// Stacks the selected bank entries into a matrix, one entry per row.
fn stack_entries(bank: &HintBank, head: usize, indices: &[usize], values: bool) -> Matrix {
    let mut out = Matrix::zeros(indices.len(), bank.head_dim());
    for (r, &idx) in indices.iter().enumerate() {
        let entry = bank.entry(head, idx);
        let src = if values { &entry.value } else { &entry.key };
        out.row_mut(r).copy_from_slice(src);
    }
    out
}

/// Mean of the selected value rows, repeated `rows` times.
fn mean_value_rows(bank: &HintBank, head: usize, indices: &[usize], rows: usize) -> Matrix {
    let dh = bank.head_dim();
    let mut mean = vec![0.0; dh];
    for &idx in indices {
        for (acc, &v) in mean.iter_mut().zip(&bank.entry(head, idx).value) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= indices.len() as f64;
    }
    let mut out = Matrix::zeros(rows, dh);
    for r in 0..rows {
        out.row_mut(r).copy_from_slice(&mean);
    }
    out
}

/// Softmax over already-scaled scores, for diagnostics.
fn softmax_weights(scores: &[f64], scale: f64) -> Vec<f64> {
    let max = scores
        .iter()
        .map(|s| s * scale)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s * scale - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// The encoder: a config plus its parameter store.
pub struct Hlm {
    config: ModelConfig,
    params: ParamStore,
}

impl Hlm {
    /// Fresh model with deterministically initialized parameters.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let params = ParamStore::init(&config, seed);
        Ok(Self { config, params })
    }

    /// Wraps an existing store (e.g. loaded from a checkpoint), checking that
    /// it matches the config.
    pub fn from_store(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        params.validate_for(&config)?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    /// Registers every parameter on the graph as a gradient-tracked leaf.
    pub fn bind(&self, g: &Graph) -> BoundParams {
        let mut entries = Vec::with_capacity(self.params.len());
        let mut index = HashMap::with_capacity(self.params.len());
        for (name, matrix) in self.params.iter() {
            index.insert(name.to_string(), entries.len());
            entries.push((name.to_string(), g.leaf(matrix, true)));
        }
        BoundParams { entries, index }
    }

    /// Gradients for every parameter after `backward`, in store order.
    /// Parameters the loss never touched get zero gradients.
    pub fn gradients(&self, g: &Graph, bound: &BoundParams) -> Vec<(String, Matrix)> {
        bound
            .iter()
            .map(|(name, t)| {
                let grad = g.grad(t).unwrap_or_else(|| {
                    let (rows, cols) = g.shape(t);
                    Matrix::zeros(rows, cols)
                });
                (name.to_string(), grad)
            })
            .collect()
    }

    /// Runs one snippet through the encoder stack.
    pub fn forward_snippet(
        &self,
        g: &Graph,
        bound: &BoundParams,
        snippet: &Snippet,
        kinds: &[Option<HintKind>],
        ctx: SnippetContext<'_>,
        rng: &mut Option<&mut dyn RngCore>,
    ) -> Result<SnippetForward, ModelError> {
        let cfg = &self.config;
        let m = cfg.bridge_tokens;
        let l = cfg.snippet_len;
        let rows = cfg.span_rows();
        let heads = cfg.num_heads;
        let dh = cfg.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        if snippet.token_ids.len() != l {
            return Err(ModelError::SnippetLen {
                index: snippet.index,
                got: snippet.token_ids.len(),
                expected: l,
            });
        }
        assert_eq!(snippet.hint_flags.len(), l, "snippet flags out of step");
        if kinds.len() != l {
            return Err(ModelError::KindsLen {
                index: snippet.index,
                got: kinds.len(),
                expected: l,
            });
        }
        let content = snippet.content_len();
        if snippet.hint_flags[content..].iter().any(|&f| f) {
            return Err(ModelError::HintOnPad {
                index: snippet.index,
            });
        }

        let mut bank_state = ctx.bank;
        let memory_on = cfg.knn_k > 0 && !matches!(bank_state, BankMode::Off);

        let tok = g.embed(bound.get("embed.tok"), &snippet.token_ids)?;
        let mut x = match ctx.bridge_in {
            Some(bridge) => g.concat_rows(&[bridge, tok])?,
            None => tok,
        };
        x = g.add(x, bound.get("embed.pos"))?;

        let mask_t = if snippet.pad_count > 0 {
            let mut mask = Matrix::zeros(rows, rows);
            for r in 0..rows {
                for c in (m + content)..rows {
                    mask.set(r, c, ATTN_MASK_VALUE);
                }
            }
            Some(g.constant(&mask))
        } else {
            None
        };

        let layer_input = ctx.capture.then(|| g.value(x));
        let mut fusion_diag: Option<FusionDiag> = None;
        let mut banked: Option<(Vec<Matrix>, Vec<Matrix>)> = None;

        for layer in 0..cfg.num_layers {
            let p = |suffix: &str| bound.get(&format!("layer{layer}.{suffix}"));
            let q = g.add_bias(g.matmul(x, p("attn.wq"))?, p("attn.bq"))?;
            let k = g.add_bias(g.matmul(x, p("attn.wk"))?, p("attn.bk"))?;
            let v = g.add_bias(g.matmul(x, p("attn.wv"))?, p("attn.bv"))?;
            let memory_layer = memory_on && layer == cfg.knn_layer;

            let bank_view: Option<&HintBank> = if memory_layer {
                match &bank_state {
                    BankMode::Live(b) => Some(b),
                    BankMode::Frozen(b) => Some(b),
                    BankMode::Off => None,
                }
            } else {
                None
            };

            let mut fused_heads = Vec::with_capacity(heads);
            let mut head_diags = Vec::new();
            for h in 0..heads {
                let qh = g.slice_cols(q, h * dh, (h + 1) * dh)?;
                let kh = g.slice_cols(k, h * dh, (h + 1) * dh)?;
                let vh = g.slice_cols(v, h * dh, (h + 1) * dh)?;
                let scores = g.affine(g.matmul(qh, g.transpose(kh))?, scale, 0.0);
                let masked = match mask_t {
                    Some(mask) => g.add(scores, mask)?,
                    None => scores,
                };
                let local_probs = g.softmax_rows(masked)?;
                let local_h = g.matmul(local_probs, vh)?;

                let retrievable = bank_view.map_or(0, |b| b.len(h));
                let fused_h = if retrievable == 0 {
                    // Nothing to retrieve: the fused stream IS the local one,
                    // with no gate applied, so a disabled and an empty memory
                    // take the identical compute path.
                    if ctx.capture && memory_layer {
                        head_diags.push(HeadFusionDiag {
                            gate: None,
                            local: g.value(local_h),
                            retrieved: None,
                            fused: g.value(local_h),
                            rows: Vec::new(),
                            local_probs: g.value(local_probs),
                            retrieved_probs: None,
                        });
                    }
                    local_h
                } else {
                    let bank = bank_view.unwrap();
                    let q_vals = g.value(qh);
                    let mut knn_probs: Option<Matrix> = None;
                    let knn_h = if retrievable <= cfg.knn_k {
                        // Every row retrieves the whole bank; score it in one
                        // batched attention over the entries in bank order.
                        let indices: Vec<usize> = (0..retrievable).collect();
                        match cfg.knn_score_mode {
                            KnnScoreMode::Joint => {
                                let keys = g.constant(&stack_entries(bank, h, &indices, false));
                                let vals = g.constant(&stack_entries(bank, h, &indices, true));
                                let s = g.affine(g.matmul(qh, g.transpose(keys))?, scale, 0.0);
                                let probs = g.softmax_rows(s)?;
                                if ctx.capture {
                                    knn_probs = Some(g.value(probs));
                                }
                                g.matmul(probs, vals)?
                            }
                            KnnScoreMode::PerNeighborLiteral => {
                                g.constant(&mean_value_rows(bank, h, &indices, rows))
                            }
                        }
                    } else {
                        // Bank larger than K: each row gets its own top-K.
                        let mut out_rows = Vec::with_capacity(rows);
                        let mut prob_rows = Vec::with_capacity(rows);
                        for r in 0..rows {
                            let hits = bank.knn_search(h, q_vals.row(r), cfg.knn_k)?;
                            let indices: Vec<usize> = hits.iter().map(|hit| hit.index).collect();
                            match cfg.knn_score_mode {
                                KnnScoreMode::Joint => {
                                    let keys =
                                        g.constant(&stack_entries(bank, h, &indices, false));
                                    let vals = g.constant(&stack_entries(bank, h, &indices, true));
                                    let qr = g.slice_rows(qh, r, r + 1)?;
                                    let s = g.affine(g.matmul(qr, g.transpose(keys))?, scale, 0.0);
                                    let probs = g.softmax_rows(s)?;
                                    if ctx.capture {
                                        prob_rows.push(g.value(probs));
                                    }
                                    out_rows.push(g.matmul(probs, vals)?);
                                }
                                KnnScoreMode::PerNeighborLiteral => {
                                    out_rows.push(g.constant(&mean_value_rows(bank, h, &indices, 1)));
                                }
                            }
                        }
                        if ctx.capture && !prob_rows.is_empty() {
                            let mut stacked = Matrix::zeros(rows, prob_rows[0].cols());
                            for (r, row) in prob_rows.iter().enumerate() {
                                stacked.row_mut(r).copy_from_slice(row.row(0));
                            }
                            knn_probs = Some(stacked);
                        }
                        g.concat_rows(&out_rows)?
                    };
                    let gate = g.slice_cols(bound.get("knn.gate"), h, h + 1)?;
                    let keep = g.sigmoid(gate);
                    let swap = g.affine(keep, -1.0, 1.0);
                    let fused = g.add(g.scale_by(local_h, keep)?, g.scale_by(knn_h, swap)?)?;
                    if ctx.capture {
                        let mut row_diags = Vec::with_capacity(rows);
                        for r in 0..rows {
                            let hits = bank.knn_search(h, q_vals.row(r), cfg.knn_k)?;
                            let indices = hits.iter().map(|hit| hit.index).collect();
                            let scores: Vec<f64> = hits.iter().map(|hit| hit.score).collect();
                            let weights = match cfg.knn_score_mode {
                                KnnScoreMode::Joint => softmax_weights(&scores, scale),
                                KnnScoreMode::PerNeighborLiteral => {
                                    vec![1.0 / scores.len() as f64; scores.len()]
                                }
                            };
                            row_diags.push(RetrievalRow {
                                indices,
                                scores,
                                weights,
                            });
                        }
                        head_diags.push(HeadFusionDiag {
                            gate: Some(g.value(keep).get(0, 0)),
                            local: g.value(local_h),
                            retrieved: Some(g.value(knn_h)),
                            fused: g.value(fused),
                            rows: row_diags,
                            local_probs: g.value(local_probs),
                            retrieved_probs: knn_probs,
                        });
                    }
                    fused
                };
                fused_heads.push(fused_h);
            }
            if ctx.capture && memory_layer {
                fusion_diag = Some(FusionDiag { heads: head_diags });
            }

            if memory_layer {
                // Raw values only: banked entries re-enter later graphs as
                // constants, so no gradient crosses the bank.
                let k_vals = g.value(k);
                let v_vals = g.value(v);
                let mut head_keys = Vec::with_capacity(heads);
                let mut head_values = Vec::with_capacity(heads);
                for h in 0..heads {
                    head_keys.push(submatrix(&k_vals, m, rows, h * dh, (h + 1) * dh));
                    head_values.push(submatrix(&v_vals, m, rows, h * dh, (h + 1) * dh));
                }
                banked = Some((head_keys, head_values));
            }

            let merged = g.concat_cols(&fused_heads)?;
            let mut attn_out = g.add_bias(g.matmul(merged, p("attn.wo"))?, p("attn.bo"))?;
            attn_out = maybe_dropout(g, attn_out, ctx.training, cfg.dropout, rng)?;
            let x1 = g.layer_norm(g.add(x, attn_out)?, p("ln1.gain"), p("ln1.bias"))?;

            let hidden = g.gelu(g.add_bias(g.matmul(x1, p("ffn.w1"))?, p("ffn.b1"))?);
            let mut ffn_out = g.add_bias(g.matmul(hidden, p("ffn.w2"))?, p("ffn.b2"))?;
            ffn_out = maybe_dropout(g, ffn_out, ctx.training, cfg.dropout, rng)?;
            x = g.layer_norm(g.add(x1, ffn_out)?, p("ln2.gain"), p("ln2.bias"))?;
        }

        let diag = ctx.capture.then(|| {
            let (banked_keys, banked_values) = banked.clone().unwrap_or_default();
            SnippetDiag {
                layer_input: layer_input.expect("captured above"),
                fusion: fusion_diag,
                banked_keys,
                banked_values,
            }
        });

        if let (BankMode::Live(bank), Some((keys, values))) = (&mut bank_state, banked) {
            bank.write(snippet.index, &keys, &values, &snippet.hint_flags, kinds)?;
        }

        let hidden = g.slice_rows(x, m, rows)?;
        let bridge_out = if m > 0 {
            Some(g.slice_rows(x, 0, m)?)
        } else {
            None
        };
        Ok(SnippetForward {
            hidden,
            bridge_out,
            diag,
        })
    }

    /// Encodes a whole document, threading the bridge and the bank across
    /// snippets.
    pub fn encode_document(
        &self,
        g: &Graph,
        bound: &BoundParams,
        input: &DocumentInput,
        opts: &EncodeOptions<'_>,
        rng: &mut Option<&mut dyn RngCore>,
    ) -> Result<DocumentEncoding, ModelError> {
        let cfg = &self.config;
        if input.snippets.is_empty() {
            return Err(ModelError::EmptyDocument);
        }
        if input.kinds.len() != input.snippets.len() {
            return Err(ModelError::KindRows {
                got: input.kinds.len(),
                expected: input.snippets.len(),
            });
        }
        if input.snippets.iter().all(|s| s.content_len() == 0) {
            return Err(ModelError::EmptyDocument);
        }
        if let Some(banks) = opts.frozen_banks {
            if banks.len() != input.snippets.len() {
                return Err(ModelError::FrozenLen {
                    got: banks.len(),
                    expected: input.snippets.len(),
                });
            }
        }

        let use_memory = cfg.knn_k > 0;
        let mut bank = HintBank::new(cfg.num_heads, cfg.head_dim(), input.doc_id.clone());
        let mut bridge = (cfg.bridge_tokens > 0).then(|| bound.get("bridge.init"));
        let mut snapshots = opts.record_bank_snapshots.then(Vec::new);
        let mut diag = opts.capture.then(EncodeDiag::default);
        let mut snippet_hidden = Vec::with_capacity(input.snippets.len());
        let mut snippet_means = Vec::with_capacity(input.snippets.len());

        for (i, snippet) in input.snippets.iter().enumerate() {
            if let Some(window) = opts.bptt_window {
                if window > 0 && i > 0 && i % window == 0 {
                    bridge = bridge.map(|b| g.detach(b));
                }
            }
            if let Some(list) = &mut snapshots {
                list.push(bank.clone());
            }
            let mode = if !use_memory {
                BankMode::Off
            } else if let Some(banks) = opts.frozen_banks {
                BankMode::Frozen(&banks[i])
            } else {
                BankMode::Live(&mut bank)
            };
            let fwd = self.forward_snippet(
                g,
                bound,
                snippet,
                &input.kinds[i],
                SnippetContext {
                    bridge_in: bridge,
                    bank: mode,
                    training: opts.training,
                    capture: opts.capture,
                },
                rng,
            )?;
            bridge = fwd.bridge_out;
            let content = snippet.content_len();
            let mean = if content == 0 || content == snippet.token_ids.len() {
                // All-pad snippets cannot come out of segmentation for a
                // non-empty document; averaging everything keeps the shape.
                g.mean_rows(fwd.hidden)?
            } else {
                g.mean_rows(g.slice_rows(fwd.hidden, 0, content)?)?
            };
            if let Some(d) = &mut diag {
                d.snippets.push(fwd.diag.expect("capture requested"));
            }
            snippet_hidden.push(fwd.hidden);
            snippet_means.push(mean);
        }

        let mut last_position = (0, 0);
        for (i, s) in input.snippets.iter().enumerate() {
            if s.content_len() > 0 {
                last_position = (i, s.content_len() - 1);
            }
        }

        let global_half = match bridge {
            Some(b) => g.mean_rows(b)?,
            None => g.mean_rows(g.concat_rows(&snippet_means)?)?,
        };
        let pooled = g.concat_cols(&[global_half, snippet_means[last_position.0]])?;

        Ok(DocumentEncoding {
            snippet_hidden,
            snippet_means,
            bridge_final: bridge,
            pooled,
            last_position,
            bank,
            bank_snapshots: snapshots,
            diag,
        })
    }

    /// Positive-class probability for the document, `[1, 1]`.
    pub fn classify(
        &self,
        g: &Graph,
        bound: &BoundParams,
        enc: &DocumentEncoding,
    ) -> Result<Tensor, ModelError> {
        let z = g.add_bias(
            g.matmul(enc.pooled, bound.get("head.cls.w"))?,
            bound.get("head.cls.b"),
        )?;
        Ok(g.sigmoid(z))
    }

    /// Vocabulary logits at the last content position, `[1, vocab_size]`.
    pub fn recommend_logits(
        &self,
        g: &Graph,
        bound: &BoundParams,
        enc: &DocumentEncoding,
    ) -> Result<Tensor, ModelError> {
        let (si, row) = enc.last_position;
        let h = g.slice_rows(enc.snippet_hidden[si], row, row + 1)?;
        Ok(g.add_bias(
            g.matmul(h, bound.get("head.out.w"))?,
            bound.get("head.out.b"),
        )?)
    }
}
