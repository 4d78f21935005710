//! Run configuration: file format, flag overrides, and the echoed copy.
//!
//! Precedence is defaults, then the config file, then command-line flags.
//! The merged result is written as `config.json` into every run directory,
//! so any run can be repeated bit-identically from its own echo.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use harness::TrainConfig;
use hlm_model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, data_err, CliError};

/// Everything a training, evaluation, or sweep run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Master seed: initializes the model and overrides `train.seed`, so a
    /// single value drives init, shuffling, and dropout.
    pub seed: u64,
    /// Success-rate cutoffs reported by ranked evaluation.
    pub ks: Vec<usize>,
    /// Dataset directory; the `--data` flag overrides.
    pub data: Option<PathBuf>,
    pub sweep: SweepSection,
}

/// Grid axes for the sweep command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub bridge_values: Vec<usize>,
    pub knn_values: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            bridge_values: vec![0, 1, 4, 8, 16],
            knn_values: vec![0, 4, 16, 32, 64],
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
            ks: vec![1, 3, 5],
            data: None,
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    /// Read a config file, or start from defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    /// Apply flag overrides, propagate the master seed, and validate.
    pub fn finalize(
        mut self,
        model: &ModelOverrides,
        train: &TrainOverrides,
        data: Option<&Path>,
    ) -> Result<Self, CliError> {
        model.apply(&mut self.model);
        train.apply(&mut self);
        if let Some(dir) = data {
            self.data = Some(dir.to_path_buf());
        }
        if let Some(dir) = &self.data {
            // Absolute in the echo, so a rerun works from any directory.
            self.data = Some(
                fs::canonicalize(dir)
                    .map_err(|e| data_err(format!("{}: {e}", dir.display())))?,
            );
        }
        self.train.seed = self.seed;
        self.model.validate().map_err(config_err)?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(CliError::Config("ks must be nonempty and positive".into()));
        }
        if self.sweep.bridge_values.is_empty() || self.sweep.knn_values.is_empty() {
            return Err(CliError::Config("sweep axes must be nonempty".into()));
        }
        Ok(self)
    }

    /// The dataset directory, which must have been set by file or flag.
    pub fn data_dir(&self) -> Result<&Path, CliError> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Config("no dataset directory: set `data` or pass --data".into()))
    }

    pub fn echo(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(data_err)?;
        fs::write(dir.join("config.json"), text + "\n").map_err(data_err)
    }
}

/// Model hyperparameter flags, taking precedence over the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelOverrides {
    /// Tokens per snippet.
    #[arg(long)]
    pub snippet_len: Option<usize>,
    /// Bridge rows prepended to each snippet; zero disables the bridge.
    #[arg(long)]
    pub bridge_tokens: Option<usize>,
    /// Neighbors retrieved per query row; zero disables hint memory.
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Zero-based index of the layer that reads and writes hint memory.
    #[arg(long)]
    pub knn_layer: Option<usize>,
}

impl ModelOverrides {
    fn apply(&self, m: &mut ModelConfig) {
        if let Some(v) = self.snippet_len {
            m.snippet_len = v;
        }
        if let Some(v) = self.bridge_tokens {
            m.bridge_tokens = v;
        }
        if let Some(v) = self.knn_k {
            m.knn_k = v;
        }
        if let Some(v) = self.knn_layer {
            m.knn_layer = v;
        }
    }
}

/// Training schedule flags, taking precedence over the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Master seed for init, shuffling, and dropout.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TrainOverrides {
    fn apply(&self, run: &mut RunConfig) {
        if let Some(v) = self.epochs {
            run.train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            run.train.batch_size = v;
        }
        if let Some(v) = self.lr {
            run.train.adam.lr = v;
        }
        if let Some(v) = self.seed {
            run.seed = v;
        }
    }
}

/// Create a fresh timestamped directory under `out`.
pub fn make_run_dir(out: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out).map_err(|e| data_err(format!("{}: {e}", out.display())))?;
    let mut stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_err(data_err)?
        .as_millis();
    loop {
        let dir = out.join(format!("run-{stamp:013}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => stamp += 1,
            Err(e) => return Err(data_err(format!("{}: {e}", dir.display()))),
        }
    }
}

/// `config.json` sitting next to a checkpoint file.
pub fn sibling_config(checkpoint: &Path) -> PathBuf {
    checkpoint
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join("config.json")
}
