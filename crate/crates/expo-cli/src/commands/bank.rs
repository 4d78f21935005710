//! Hint-bank inspection for one encoded file.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use code_ingest::{Tokenizer, Vocab};
use harness::{Pipeline, TrainState};
use hint_extract::Language;
use hlm_model::EncodeOptions;
use tensor_core::Graph;

use crate::config::{sibling_config, ModelOverrides, RunConfig, TrainOverrides};
use crate::dataset::vocab_path;
use crate::error::{data_err, CliError};

/// Encode one source file and dump the resulting hint bank as JSONL.
#[derive(Args, Debug)]
pub struct BankArgs {
    /// Checkpoint file supplying the model.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Run configuration; defaults to config.json beside the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset or split directory supplying the vocabulary.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Source file to encode.
    #[arg(long)]
    pub file: PathBuf,
    /// Source language of the probe file.
    #[arg(long, default_value = "python")]
    pub language: Language,
    /// Output JSONL; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &BankArgs) -> Result<(), CliError> {
    let cfg_path = args
        .config
        .clone()
        .unwrap_or_else(|| sibling_config(&args.checkpoint));
    let cfg = RunConfig::load(Some(&cfg_path))?.finalize(
        &ModelOverrides::default(),
        &TrainOverrides::default(),
        args.data.as_deref(),
    )?;
    let state = TrainState::load(&args.checkpoint, &cfg.model, cfg.train.adam)
        .map_err(|e| data_err(format!("{}: {e}", args.checkpoint.display())))?;

    let vocab_file = vocab_path(cfg.data_dir()?)?;
    let vocab = Vocab::from_json(
        &fs::read_to_string(&vocab_file)
            .map_err(|e| data_err(format!("{}: {e}", vocab_file.display())))?,
    )
    .map_err(data_err)?;
    let pipeline = Pipeline {
        tokenizer: Tokenizer::new(vocab),
        language: args.language,
        snippet_len: cfg.model.snippet_len,
        max_code_len: cfg.model.max_code_len,
    };
    let source = fs::read_to_string(&args.file)
        .map_err(|e| data_err(format!("{}: {e}", args.file.display())))?;
    let doc = pipeline.prepare("probe", &source).map_err(data_err)?;

    let g = Graph::new();
    let bound = state.model.bind(&g);
    let enc = state
        .model
        .encode_document(&g, &bound, &doc, &EncodeOptions::default(), &mut None)
        .map_err(data_err)?;
    match &args.out {
        Some(path) => {
            let mut buf = Vec::new();
            enc.bank.snapshot_jsonl(&mut buf).map_err(data_err)?;
            fs::write(path, buf).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            enc.bank.snapshot_jsonl(&mut lock).map_err(data_err)?;
            lock.flush().map_err(data_err)?;
        }
    }
    eprintln!(
        "{} entries across {} heads",
        enc.bank.total_len(),
        enc.bank.num_heads()
    );
    Ok(())
}
