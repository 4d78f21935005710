//! Bridge-by-neighbor grid sweeps.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use harness::{run_sweep, sweep_csv, SweepGrid};

use crate::commands::eval::parse_list;
use crate::config::{make_run_dir, ModelOverrides, RunConfig, TrainOverrides};
use crate::dataset::open_split;
use crate::error::{data_err, CliError};

/// Train one model per grid cell and tabulate eval metrics.
#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Run configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Split directory with train/ and eval/ halves.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Comma-separated bridge-row counts, overriding the config grid.
    #[arg(long)]
    pub bridge: Option<String>,
    /// Comma-separated neighbor counts, overriding the config grid.
    #[arg(long)]
    pub knn: Option<String>,
    #[command(flatten)]
    pub model: ModelOverrides,
    #[command(flatten)]
    pub train: TrainOverrides,
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(bridge) = &args.bridge {
        cfg.sweep.bridge_values = parse_list(bridge)?;
    }
    if let Some(knn) = &args.knn {
        cfg.sweep.knn_values = parse_list(knn)?;
    }
    let cfg = cfg.finalize(&args.model, &args.train, args.data.as_deref())?;
    let (train_ds, eval_ds) = open_split(cfg.data_dir()?)?;
    let run_dir = make_run_dir(&args.out)?;
    cfg.echo(&run_dir)?;

    let grid = SweepGrid {
        bridge_values: &cfg.sweep.bridge_values,
        knn_values: &cfg.sweep.knn_values,
    };
    let report = run_sweep(
        &cfg.model,
        &grid,
        &train_ds,
        &eval_ds,
        &cfg.train,
        cfg.seed,
        &cfg.ks,
    )
    .map_err(data_err)?;
    let json = serde_json::to_string_pretty(&report).map_err(data_err)?;
    fs::write(run_dir.join("sweep.json"), json + "\n").map_err(data_err)?;
    fs::write(run_dir.join("sweep.csv"), sweep_csv(&report)).map_err(data_err)?;
    eprintln!("swept {} cells", report.cells.len());
    println!("{}", run_dir.display());
    Ok(())
}
