//! Scratch calibration runner; not part of the test suite.

use std::time::Instant;

use harness::{
    eval_rank_dataset, gen_dataset, train, AdamConfig, SyntheticTaskSpec, TaskKind, TrainConfig,
    TrainState,
};
use hlm_model::ModelConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10);
    let size: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(96);
    let split: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(64);
    let variant: &str = args.get(5).map(String::as_str).unwrap_or("full");
    let seed: u64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(0);
    let batch: usize = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(4);
    let aux: f64 = args.get(8).map(|s| s.parse().unwrap()).unwrap_or(1.0);

    let spec = SyntheticTaskSpec {
        task: TaskKind::Recall,
        size,
        seed: 1000,
        ..SyntheticTaskSpec::default()
    };
    let ds = gen_dataset(&spec).unwrap();
    let (train_ds, eval_ds) = ds.split_at(split).unwrap();
    let mut config = ModelConfig::default();
    match variant {
        "full" => {}
        "no_bridge" => config.bridge_tokens = 0,
        "no_hint" => config.knn_k = 0,
        other => panic!("unknown variant {other}"),
    }
    let cfg = TrainConfig {
        epochs,
        batch_size: batch,
        adam: AdamConfig {
            lr,
            ..AdamConfig::default()
        },
        seed,
        bptt_window: Some(2),
        overfit_first_batch: false,
        max_steps: None,
        aux_lm_weight: aux,
    };
    let t0 = Instant::now();
    let mut state = TrainState::fresh(config, seed, cfg.adam).unwrap();
    for epoch in 0..epochs {
        let mut step_cfg = cfg.clone();
        step_cfg.epochs = epoch + 1;
        let curve = train(&mut state, &train_ds, &step_cfg, None).unwrap();
        let last = curve.last().map(|p| p.loss).unwrap_or(f64::NAN);
        let (report, batch) = eval_rank_dataset(&state.model, &eval_ds, &[1, 3]).unwrap();
        let (mut hint_hits, mut chain_hits, mut n_hint, mut n_chain) = (0, 0, 0, 0);
        for (i, (list, gold)) in batch.ranked.iter().zip(&batch.gold).enumerate() {
            // Eval examples continue the parity of the generator: the split
            // tail starts at an even global index when `split` is even.
            let hit = usize::from(list[0] == *gold);
            if (split + i) % 2 == 0 {
                hint_hits += hit;
                n_hint += 1;
            } else {
                chain_hits += hit;
                n_chain += 1;
            }
        }
        println!(
            "epoch {:2}  loss {:7.4}  eval acc {:.3} (hint {}/{} chain {}/{})  sr@3 {:.3}  mrr {:.3}  elapsed {:?}",
            epoch + 1,
            last,
            report.accuracy,
            hint_hits,
            n_hint,
            chain_hits,
            n_chain,
            report.sr_at[&3],
            report.mrr.unwrap(),
            t0.elapsed()
        );
    }
    let (train_report, train_batch) = eval_rank_dataset(&state.model, &train_ds, &[1, 3]).unwrap();
    let (mut th, mut tc, mut nh, mut nc) = (0, 0, 0, 0);
    for (i, (list, gold)) in train_batch.ranked.iter().zip(&train_batch.gold).enumerate() {
        let hit = usize::from(list[0] == *gold);
        if i % 2 == 0 {
            th += hit;
            nh += 1;
        } else {
            tc += hit;
            nc += 1;
        }
    }
    println!(
        "train acc {:.3} (hint {th}/{nh} chain {tc}/{nc})",
        train_report.accuracy
    );
    probe_attention(&state, &eval_ds, split);
}

/// Inspect gates and retrieval weights at the query position of one
/// hint-type eval document.
fn probe_attention(state: &TrainState, eval_ds: &harness::Dataset, split: usize) {
    use code_ingest::Tokenizer;
    use hint_extract::Language;
    use hlm_model::EncodeOptions;
    use tensor_core::Graph;

    let model = &state.model;
    let cfg = model.config();
    if cfg.knn_k == 0 {
        println!("probe: retrieval disabled");
        return;
    }
    let pipeline = harness::Pipeline {
        tokenizer: Tokenizer::new(eval_ds.vocab.clone()),
        language: Language::Python,
        snippet_len: cfg.snippet_len,
        max_code_len: cfg.max_code_len,
    };
    // First hint-type example in the eval split.
    let idx = if split % 2 == 0 { 0 } else { 1 };
    let doc = pipeline.prepare("probe", eval_ds.source(idx)).unwrap();
    let g = Graph::new();
    let bound = model.bind(&g);
    let opts = EncodeOptions {
        capture: true,
        ..EncodeOptions::default()
    };
    let enc = model
        .encode_document(&g, &bound, &doc, &opts, &mut None)
        .unwrap();
    let diag = enc.diag.as_ref().expect("capture enabled");
    let last = diag.snippets.last().unwrap();
    let fusion = last.fusion.as_ref().expect("memory layer diag");
    for (h, head) in fusion.heads.iter().enumerate() {
        let row = head.rows.last().expect("query row");
        let mut pairs: Vec<(usize, f64)> = row
            .indices
            .iter()
            .copied()
            .zip(row.weights.iter().copied())
            .collect();
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<String> = pairs
            .iter()
            .take(4)
            .map(|(i, w)| {
                let e = enc.bank.entry(h, *i);
                format!("s{}t{} {:.3}", e.snippet_index, e.token_index, w)
            })
            .collect();
        println!(
            "head {h}: gate {:.3}  query-row retrieval top: {}",
            head.gate.unwrap_or(f64::NAN),
            top.join(", ")
        );
    }
}
