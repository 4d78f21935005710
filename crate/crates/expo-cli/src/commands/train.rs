//! Training into a timestamped run directory.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use harness::{train, TrainState};

use crate::config::{make_run_dir, ModelOverrides, RunConfig, TrainOverrides};
use crate::dataset::{open_dataset, Role};
use crate::error::{config_err, data_err, CliError};

/// Train a fresh model; artifacts land in a timestamped run directory.
#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Run configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset or split directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelOverrides,
    #[command(flatten)]
    pub train: TrainOverrides,
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.config.as_deref())?.finalize(
        &args.model,
        &args.train,
        args.data.as_deref(),
    )?;
    let ds = open_dataset(cfg.data_dir()?, Role::Train)?;
    let run_dir = make_run_dir(&args.out)?;
    cfg.echo(&run_dir)?;

    let mut state = TrainState::fresh(cfg.model.clone(), cfg.seed, cfg.train.adam)
        .map_err(config_err)?;
    let curve = train(&mut state, &ds, &cfg.train, Some(&run_dir)).map_err(data_err)?;
    state.save(&run_dir.join("model.ckpt")).map_err(data_err)?;
    let curve_json = serde_json::to_string_pretty(&curve).map_err(data_err)?;
    fs::write(run_dir.join("loss_curve.json"), curve_json + "\n").map_err(data_err)?;

    let last = curve.last().map(|p| p.loss);
    eprintln!(
        "trained {} examples for {} epochs ({} steps, final loss {})",
        ds.len(),
        cfg.train.epochs,
        state.step,
        last.map_or_else(|| "n/a".into(), |l| format!("{l:.4}")),
    );
    println!("{}", run_dir.display());
    Ok(())
}
