//! Command-line front end for the dual-memory code model.
//!
//! Subcommands cover the full workflow: hint extraction from sources,
//! synthetic dataset generation, training, evaluation, grid sweeps, and
//! hint-bank inspection. Every run directory carries an echo of its
//! effective configuration, so any result can be regenerated bit-identically
//! from the echo and its seed. Exit codes: 0 success, 1 data error, 2
//! config error.

mod commands;
mod config;
mod dataset;
mod error;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "expo", version, about = "Dual-memory code model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract hint spans, a token dump, and an aligned mask from sources.
    ExtractHints(commands::extract::ExtractArgs),
    /// Generate a synthetic dataset.
    GenData(commands::gen::GenArgs),
    /// Train a model into a timestamped run directory.
    Train(commands::train::TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(commands::eval::EvalArgs),
    /// Train one model per grid cell and tabulate metrics.
    Sweep(commands::sweep::SweepArgs),
    /// Encode one file and dump the resulting hint bank.
    BankDump(commands::bank::BankArgs),
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::ExtractHints(args) => commands::extract::run(args),
        Command::GenData(args) => commands::gen::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::BankDump(args) => commands::bank::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
