//! Synthetic dataset generation.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use harness::{gen_dataset, SyntheticTaskSpec, TaskKind};

use crate::error::{config_err, data_err, CliError};

/// Generate a synthetic dataset, optionally pre-split into train and eval.
#[derive(Args, Debug)]
pub struct GenArgs {
    /// Task to generate: recall, vuln, or api.
    #[arg(long)]
    pub task: TaskKind,
    /// Number of examples.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Tokens per snippet.
    #[arg(long, default_value_t = 32)]
    pub snippet_len: usize,
    /// Cap on distinct tokens across the corpus.
    #[arg(long, default_value_t = 512)]
    pub vocab_budget: usize,
    /// Fewest snippets per document.
    #[arg(long, default_value_t = 8)]
    pub min_snippets: usize,
    /// Most snippets per document.
    #[arg(long, default_value_t = 8)]
    pub max_snippets: usize,
    /// Write the first N examples to train/ and the rest to eval/.
    #[arg(long)]
    pub split: Option<usize>,
}

pub fn run(args: &GenArgs) -> Result<(), CliError> {
    let spec = SyntheticTaskSpec {
        task: args.task,
        size: args.size,
        seed: args.seed,
        vocab_budget: args.vocab_budget,
        snippet_len: args.snippet_len,
        num_snippets_range: (args.min_snippets, args.max_snippets),
    };
    let ds = gen_dataset(&spec).map_err(config_err)?;
    let io = |e: harness::HarnessError| data_err(format!("{}: {e}", args.out.display()));
    fs::create_dir_all(&args.out).map_err(|e| data_err(format!("{}: {e}", args.out.display())))?;
    match args.split {
        Some(n) => {
            let (train, eval) = ds.split_at(n).map_err(config_err)?;
            train.write(&args.out.join("train")).map_err(io)?;
            eval.write(&args.out.join("eval")).map_err(io)?;
        }
        None => ds.write(&args.out).map_err(io)?,
    }
    let echo = serde_json::to_string_pretty(&spec).map_err(data_err)?;
    fs::write(args.out.join("spec.json"), echo + "\n")
        .map_err(|e| data_err(format!("{}: {e}", args.out.display())))?;
    println!("{}", args.out.display());
    Ok(())
}
