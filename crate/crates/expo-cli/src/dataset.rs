//! Locating datasets on disk.
//!
//! A directory either holds a dataset directly (`meta.json` at its root) or
//! is a split produced by `gen-data --split`, with `train/` and `eval/`
//! halves sharing one vocabulary.

use std::path::{Path, PathBuf};

use harness::Dataset;

use crate::error::{data_err, CliError};

/// Which half a command wants when pointed at a split directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Train,
    Eval,
}

impl Role {
    fn subdir(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Eval => "eval",
        }
    }
}

fn is_dataset(dir: &Path) -> bool {
    dir.join("meta.json").is_file()
}

/// Read a dataset, descending into the role's half of a split directory.
pub fn open_dataset(dir: &Path, role: Role) -> Result<Dataset, CliError> {
    let root = if is_dataset(dir) {
        dir.to_path_buf()
    } else {
        let sub = dir.join(role.subdir());
        if !is_dataset(&sub) {
            return Err(data_err(format!(
                "{}: neither a dataset nor a split directory",
                dir.display()
            )));
        }
        sub
    };
    Dataset::read(&root).map_err(|e| data_err(format!("{}: {e}", root.display())))
}

/// Read both halves of a split directory.
pub fn open_split(dir: &Path) -> Result<(Dataset, Dataset), CliError> {
    if is_dataset(dir) {
        return Err(data_err(format!(
            "{}: holds a single dataset; a split with train/ and eval/ is needed",
            dir.display()
        )));
    }
    Ok((
        open_dataset(dir, Role::Train)?,
        open_dataset(dir, Role::Eval)?,
    ))
}

/// The vocabulary file serving a dataset or split directory.
pub fn vocab_path(dir: &Path) -> Result<PathBuf, CliError> {
    for candidate in [dir.join("vocab.json"), dir.join("train").join("vocab.json")] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(data_err(format!("{}: no vocab.json found", dir.display())))
}
