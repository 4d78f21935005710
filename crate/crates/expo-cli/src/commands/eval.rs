//! Scoring a checkpoint against a dataset.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use harness::{eval_binary_dataset, eval_rank_dataset, TrainState};

use crate::config::{sibling_config, ModelOverrides, RunConfig, TrainOverrides};
use crate::dataset::{open_dataset, Role};
use crate::error::{config_err, data_err, CliError};

/// Evaluate a checkpoint; the metrics report prints to stdout as JSON.
#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Checkpoint file to score.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Run configuration; defaults to config.json beside the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset or split directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated success-rate cutoffs, overriding the config.
    #[arg(long)]
    pub ks: Option<String>,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse a comma-separated list of positive integers.
pub fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| config_err(format!("{part:?}: {e}")))
        })
        .collect()
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let cfg_path = args
        .config
        .clone()
        .unwrap_or_else(|| sibling_config(&args.checkpoint));
    let mut cfg = RunConfig::load(Some(&cfg_path))?;
    if let Some(ks) = &args.ks {
        cfg.ks = parse_list(ks)?;
    }
    let cfg = cfg.finalize(
        &ModelOverrides::default(),
        &TrainOverrides::default(),
        args.data.as_deref(),
    )?;

    let state = TrainState::load(&args.checkpoint, &cfg.model, cfg.train.adam)
        .map_err(|e| data_err(format!("{}: {e}", args.checkpoint.display())))?;
    let ds = open_dataset(cfg.data_dir()?, Role::Eval)?;
    let report = if ds.task.is_ranked() {
        eval_rank_dataset(&state.model, &ds, &cfg.ks).map_err(data_err)?.0
    } else {
        eval_binary_dataset(&state.model, &ds).map_err(data_err)?.0
    };
    let json = serde_json::to_string_pretty(&report).map_err(data_err)? + "\n";
    if let Some(out) = &args.out {
        fs::write(out, &json).map_err(|e| data_err(format!("{}: {e}", out.display())))?;
    }
    print!("{json}");
    Ok(())
}
