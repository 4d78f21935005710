#![allow(dead_code)]

use code_ingest::{Snippet, PAD_ID};
use hint_extract::HintKind;
use hlm_model::{BoundParams, DocumentEncoding, DocumentInput, EncodeOptions, Hlm, ModelConfig};
use tensor_core::{Graph, Tensor};

/// Small two-layer setup used by the wiring and gradient tests.
pub fn probe_config() -> ModelConfig {
    ModelConfig {
        vocab_size: 24,
        d_model: 16,
        num_heads: 2,
        num_layers: 2,
        snippet_len: 8,
        max_code_len: 64,
        bridge_tokens: 1,
        knn_k: 2,
        knn_layer: 0,
        dropout: 0.0,
        ..ModelConfig::default()
    }
}

pub fn snippet(index: usize, mut ids: Vec<usize>, pad_count: usize, hints: &[usize]) -> Snippet {
    let len = ids.len();
    for slot in ids.iter_mut().skip(len - pad_count) {
        *slot = PAD_ID;
    }
    let mut flags = vec![false; len];
    for &p in hints {
        assert!(p < len - pad_count, "hint on a pad position");
        flags[p] = true;
    }
    Snippet {
        index,
        token_ids: ids,
        pad_count,
        hint_flags: flags,
    }
}

/// Two snippets over the probe vocabulary; `hint_count` hints in the first.
pub fn probe_doc(hint_count: usize) -> DocumentInput {
    let hints: Vec<usize> = [1usize, 4, 6].into_iter().take(hint_count).collect();
    let snippets = vec![
        snippet(0, vec![2, 3, 4, 5, 6, 7, 8, 9], 0, &hints),
        snippet(1, vec![10, 11, 12, 13, 14, 15, 0, 0], 2, &[]),
    ];
    DocumentInput::with_uniform_kind("probe-doc", snippets, HintKind::FieldDefinition)
}

/// Recommendation loss plus classification loss on one document.
pub fn doc_loss(
    model: &Hlm,
    g: &Graph,
    bound: &BoundParams,
    doc: &DocumentInput,
    opts: &EncodeOptions<'_>,
    target: usize,
) -> (Tensor, DocumentEncoding) {
    let enc = model
        .encode_document(g, bound, doc, opts, &mut None)
        .expect("encode");
    let logits = model.recommend_logits(g, bound, &enc).expect("logits");
    let ce = g.cross_entropy(logits, &[target]).expect("ce");
    let prob = model.classify(g, bound, &enc).expect("classify");
    let bce = g.binary_cross_entropy(prob, 1.0).expect("bce");
    let loss = g.add(ce, bce).expect("loss");
    (loss, enc)
}
