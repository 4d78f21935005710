//! Behavioral checks of the two memories: bridge recurrence and truncation,
//! bank timeline and write contents, gate fusion, and the bypass paths.

mod common;

use common::{doc_loss, probe_config, probe_doc, snippet};
use hint_extract::HintKind;
use hlm_model::{DocumentInput, EncodeOptions, Hlm, ModelConfig};
use tensor_core::{Graph, Matrix};

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn four_snippet_doc(first_token: usize) -> DocumentInput {
    let snippets = vec![
        snippet(0, vec![first_token, 3, 4, 5, 6, 7, 8, 9], 0, &[]),
        snippet(1, vec![10, 11, 12, 13, 14, 15, 16, 17], 0, &[]),
        snippet(2, vec![18, 19, 2, 3, 4, 5, 6, 7], 0, &[]),
        snippet(3, vec![8, 9, 10, 11, 12, 13, 14, 15], 0, &[]),
    ];
    DocumentInput::with_uniform_kind("wiring-doc", snippets, HintKind::FieldDefinition)
}

fn encode_pooled(model: &Hlm, doc: &DocumentInput) -> (Matrix, Vec<Matrix>) {
    let g = Graph::new();
    let bound = model.bind(&g);
    let enc = model
        .encode_document(&g, &bound, doc, &EncodeOptions::default(), &mut None)
        .unwrap();
    let hidden = enc.snippet_hidden.iter().map(|&t| g.value(t)).collect();
    (g.value(enc.pooled), hidden)
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn bridge_carries_snippet_state_forward() {
    let with_bridge = ModelConfig {
        knn_k: 0,
        ..probe_config()
    };
    let without_bridge = ModelConfig {
        bridge_tokens: 0,
        ..with_bridge.clone()
    };
    let doc_a = four_snippet_doc(2);
    let doc_b = four_snippet_doc(21);

    let model = Hlm::new(with_bridge, 5).unwrap();
    let (_, hidden_a) = encode_pooled(&model, &doc_a);
    let (_, hidden_b) = encode_pooled(&model, &doc_b);
    assert!(
        max_abs_diff(&hidden_a[1], &hidden_b[1]) > 1e-6,
        "later snippets should see the first snippet through the bridge"
    );

    let model = Hlm::new(without_bridge, 5).unwrap();
    let (_, hidden_a) = encode_pooled(&model, &doc_a);
    let (_, hidden_b) = encode_pooled(&model, &doc_b);
    assert_eq!(
        hidden_a[1].data(),
        hidden_b[1].data(),
        "with no bridge and no hints, snippets must encode independently"
    );
}

#[test]
fn bptt_window_stops_gradients_at_the_detach_points() {
    let cfg = ModelConfig {
        knn_k: 0,
        ..probe_config()
    };
    // Token 21 appears only in snippet 0; token 15 appears in snippet 3.
    let doc = four_snippet_doc(21);
    let grads_for = |window: Option<usize>| {
        let model = Hlm::new(cfg.clone(), 5).unwrap();
        let g = Graph::new();
        let bound = model.bind(&g);
        let opts = EncodeOptions {
            bptt_window: window,
            ..EncodeOptions::default()
        };
        let (loss, _) = doc_loss(&model, &g, &bound, &doc, &opts, 12);
        g.backward(loss).unwrap();
        model
            .gradients(&g, &bound)
            .into_iter()
            .collect::<std::collections::BTreeMap<_, _>>()
    };

    let full = grads_for(None);
    let truncated = grads_for(Some(1));

    let row_norm = |grads: &std::collections::BTreeMap<String, Matrix>, id: usize| {
        grads["embed.tok"]
            .row(id)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    };
    assert!(row_norm(&full, 21) > 1e-12, "full backprop reaches snippet 0");
    assert_eq!(
        row_norm(&truncated, 21),
        0.0,
        "a window of 1 detaches every bridge hop, so snippet 0 gets nothing"
    );
    assert!(row_norm(&truncated, 15) > 1e-12, "local gradients survive");

    let bridge_grad = |grads: &std::collections::BTreeMap<String, Matrix>| {
        grads["bridge.init"]
            .data()
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    };
    assert!(bridge_grad(&full) > 1e-12);
    assert_eq!(bridge_grad(&truncated), 0.0);
}

#[test]
fn retrieval_sees_only_earlier_snippets() {
    let cfg = probe_config();
    let model = Hlm::new(cfg, 9).unwrap();
    let snippets = vec![
        snippet(0, vec![2, 3, 4, 5, 6, 7, 8, 9], 0, &[1, 4]),
        snippet(1, vec![10, 11, 12, 13, 14, 15, 16, 17], 0, &[0]),
        snippet(2, vec![18, 19, 2, 3, 4, 5, 6, 7], 0, &[2]),
    ];
    let doc = DocumentInput::with_uniform_kind("timeline", snippets, HintKind::ImportStatement);
    let g = Graph::new();
    let bound = model.bind(&g);
    let opts = EncodeOptions {
        record_bank_snapshots: true,
        capture: true,
        ..EncodeOptions::default()
    };
    let enc = model
        .encode_document(&g, &bound, &doc, &opts, &mut None)
        .unwrap();

    let snapshots = enc.bank_snapshots.unwrap();
    assert_eq!(snapshots[0].total_len(), 0);
    assert_eq!(snapshots[1].total_len(), 2 * 2);
    assert_eq!(snapshots[2].total_len(), 3 * 2);
    assert_eq!(enc.bank.total_len(), 4 * 2);

    let diag = enc.diag.unwrap();
    for head in &diag.snippets[0].fusion.as_ref().unwrap().heads {
        assert!(head.gate.is_none(), "snippet 0 has nothing to retrieve");
        assert!(head.rows.is_empty());
    }
    for (i, snip_diag) in diag.snippets.iter().enumerate().skip(1) {
        for (h, head) in snip_diag.fusion.as_ref().unwrap().heads.iter().enumerate() {
            assert!(head.gate.is_some());
            for row in &head.rows {
                assert!(!row.indices.is_empty());
                for &idx in &row.indices {
                    let entry = enc.bank.entry(h, idx);
                    assert!(
                        entry.snippet_index < i,
                        "snippet {i} retrieved an entry written by snippet {}",
                        entry.snippet_index
                    );
                }
            }
        }
    }
}

#[test]
fn bank_holds_the_flagged_projection_rows() {
    let cfg = probe_config();
    let model = Hlm::new(cfg.clone(), 13).unwrap();
    let snippets = vec![
        snippet(0, vec![2, 3, 4, 5, 6, 7, 8, 9], 0, &[1, 4]),
        snippet(1, vec![10, 11, 12, 13, 14, 15, 0, 0], 2, &[0, 3]),
    ];
    let doc = DocumentInput::with_uniform_kind("contents", snippets, HintKind::LineComment);
    let g = Graph::new();
    let bound = model.bind(&g);
    let opts = EncodeOptions {
        capture: true,
        ..EncodeOptions::default()
    };
    let enc = model
        .encode_document(&g, &bound, &doc, &opts, &mut None)
        .unwrap();
    let diag = enc.diag.unwrap();

    let flagged: usize = doc
        .snippets
        .iter()
        .map(|s| s.hint_flags.iter().filter(|&&f| f).count())
        .sum();
    assert_eq!(enc.bank.total_len(), flagged * cfg.num_heads);

    for h in 0..cfg.num_heads {
        let mut cursor = 0;
        for (s, snip) in doc.snippets.iter().enumerate() {
            for (pos, &flag) in snip.hint_flags.iter().enumerate() {
                if !flag {
                    continue;
                }
                let entry = enc.bank.entry(h, cursor);
                cursor += 1;
                assert_eq!(entry.snippet_index, s);
                assert_eq!(entry.token_index, pos);
                assert_eq!(entry.kind, HintKind::LineComment);
                assert_eq!(entry.key, diag.snippets[s].banked_keys[h].row(pos));
                assert_eq!(entry.value, diag.snippets[s].banked_values[h].row(pos));
            }
        }
        assert_eq!(cursor, enc.bank.len(h));
    }
}

#[test]
fn gate_blends_the_two_attention_streams() {
    let cfg = probe_config();
    let model = Hlm::new(cfg.clone(), 17).unwrap();
    let doc = probe_doc(2);
    let g = Graph::new();
    let bound = model.bind(&g);
    let opts = EncodeOptions {
        capture: true,
        ..EncodeOptions::default()
    };
    let enc = model
        .encode_document(&g, &bound, &doc, &opts, &mut None)
        .unwrap();
    let diag = enc.diag.unwrap();
    let gate_param = model.params().get("knn.gate").unwrap().clone();

    let fusion = diag.snippets[1].fusion.as_ref().unwrap();
    for (h, head) in fusion.heads.iter().enumerate() {
        let s = head.gate.expect("snippet 1 retrieves");
        assert!(
            (s - stable_sigmoid(gate_param.get(0, h))).abs() < 1e-15,
            "gate must be the sigmoid of its parameter"
        );
        let retrieved = head.retrieved.as_ref().unwrap();
        for r in 0..head.fused.rows() {
            for c in 0..head.fused.cols() {
                let want = s * head.local.get(r, c) + (1.0 - s) * retrieved.get(r, c);
                assert!(
                    (head.fused.get(r, c) - want).abs() < 1e-12,
                    "fusion is not the gated convex mix"
                );
            }
        }
    }

    // Pushing the gate parameter up must shift the fused stream toward
    // purely local attention.
    let mut shifted = Hlm::new(cfg, 17).unwrap();
    for v in shifted.params_mut().get_mut("knn.gate").unwrap().data_mut() {
        *v = 6.0;
    }
    let g2 = Graph::new();
    let bound2 = shifted.bind(&g2);
    let enc2 = shifted
        .encode_document(&g2, &bound2, &doc, &opts, &mut None)
        .unwrap();
    let diag2 = enc2.diag.unwrap();
    let dist = |d: &hlm_model::EncodeDiag| {
        let f = d.snippets[1].fusion.as_ref().unwrap();
        f.heads
            .iter()
            .map(|h| {
                h.fused
                    .data()
                    .iter()
                    .zip(h.local.data())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    assert!(
        dist(&diag2) < dist(&diag) * 0.1,
        "a saturated gate should all but remove the retrieved stream"
    );
}

#[test]
fn unflagged_documents_match_disabled_memory_bitwise() {
    let with_memory = probe_config();
    let without_memory = ModelConfig {
        knn_k: 0,
        ..with_memory.clone()
    };
    let doc = probe_doc(0);

    let model_on = Hlm::new(with_memory, 23).unwrap();
    let model_off = Hlm::new(without_memory, 23).unwrap();
    let (pooled_on, hidden_on) = encode_pooled(&model_on, &doc);
    let (pooled_off, hidden_off) = encode_pooled(&model_off, &doc);

    assert_eq!(pooled_on.data(), pooled_off.data());
    for (a, b) in hidden_on.iter().zip(&hidden_off) {
        assert_eq!(a.data(), b.data());
    }
}

#[test]
fn frozen_replay_reproduces_the_live_run_bitwise() {
    let model = Hlm::new(probe_config(), 29).unwrap();
    let doc = probe_doc(3);

    let g = Graph::new();
    let bound = model.bind(&g);
    let live_opts = EncodeOptions {
        record_bank_snapshots: true,
        ..EncodeOptions::default()
    };
    let (live_loss, live_enc) = doc_loss(&model, &g, &bound, &doc, &live_opts, 7);
    let snapshots = live_enc.bank_snapshots.as_ref().unwrap();

    let g2 = Graph::new();
    let bound2 = model.bind(&g2);
    let replay_opts = EncodeOptions {
        frozen_banks: Some(snapshots),
        ..EncodeOptions::default()
    };
    let (replay_loss, _) = doc_loss(&model, &g2, &bound2, &doc, &replay_opts, 7);

    assert_eq!(
        g.value(live_loss).get(0, 0),
        g2.value(replay_loss).get(0, 0),
        "replaying recorded bank states must not change the objective"
    );
}

#[test]
fn parameter_count_shrinks_exactly_with_each_memory() {
    let full = probe_config();
    let no_bridge = ModelConfig {
        bridge_tokens: 0,
        ..full.clone()
    };
    let no_hints = ModelConfig {
        knn_k: 0,
        ..full.clone()
    };
    let count = |cfg: &ModelConfig| Hlm::new(cfg.clone(), 1).unwrap().param_count();

    let full_n = count(&full);
    // Dropping the bridge removes its initial rows and their positions.
    assert_eq!(
        full_n - count(&no_bridge),
        2 * full.bridge_tokens * full.d_model
    );
    // Dropping hint memory removes one gate per head.
    assert_eq!(full_n - count(&no_hints), full.num_heads);
}
