//! Dataset container and on-disk layout for the synthetic tasks.
//!
//! A dataset directory holds three files: `data.jsonl` with one example per
//! line, `vocab.json` with the token table built over the whole corpus, and
//! `meta.json` naming the task. Examples embed raw source text; token ids are
//! recomputed from the stored vocabulary so a dataset round-trips exactly.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use code_ingest::Vocab;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Recover a bound value given its name at the end of the document.
    Recall,
    /// Classify whether a late array write is guarded by the declared bound.
    Vuln,
    /// Recover the method behind a module alias.
    Api,
}

impl TaskKind {
    pub fn is_ranked(self) -> bool {
        !matches!(self, TaskKind::Vuln)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TaskKind::Recall => "recall",
            TaskKind::Vuln => "vuln",
            TaskKind::Api => "api",
        };
        f.write_str(name)
    }
}

impl FromStr for TaskKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "recall" => Ok(TaskKind::Recall),
            "vuln" => Ok(TaskKind::Vuln),
            "api" => Ok(TaskKind::Api),
            other => Err(HarnessError::InvalidSpec(format!(
                "unknown task {other:?}; expected recall, vuln, or api"
            ))),
        }
    }
}

/// One retrieval-style example: the model must rank `target_id` first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedExample {
    pub source: String,
    pub target_id: usize,
}

/// One classification example: label 1 marks a vulnerable document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub source: String,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Examples {
    Ranked(Vec<RankedExample>),
    Labeled(Vec<LabeledExample>),
}

impl Examples {
    pub fn len(&self) -> usize {
        match self {
            Examples::Ranked(v) => v.len(),
            Examples::Labeled(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub task: TaskKind,
    pub vocab: Vocab,
    pub examples: Examples,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    task: TaskKind,
    size: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Ranked examples, or an error for a classification dataset.
    pub fn ranked(&self) -> Result<&[RankedExample], HarnessError> {
        match &self.examples {
            Examples::Ranked(v) => Ok(v),
            Examples::Labeled(_) => Err(HarnessError::TaskMismatch {
                expected: "ranked",
                got: "labeled",
            }),
        }
    }

    /// Labeled examples, or an error for a retrieval dataset.
    pub fn labeled(&self) -> Result<&[LabeledExample], HarnessError> {
        match &self.examples {
            Examples::Labeled(v) => Ok(v),
            Examples::Ranked(_) => Err(HarnessError::TaskMismatch {
                expected: "labeled",
                got: "ranked",
            }),
        }
    }

    /// Source text of example `i` regardless of task flavor.
    pub fn source(&self, i: usize) -> &str {
        match &self.examples {
            Examples::Ranked(v) => &v[i].source,
            Examples::Labeled(v) => &v[i].source,
        }
    }

    /// Split into a training head of `n` examples and an evaluation tail.
    ///
    /// Both halves share the full-corpus vocabulary, so token ids and ranked
    /// targets stay valid across the split.
    pub fn split_at(&self, n: usize) -> Result<(Dataset, Dataset), HarnessError> {
        if n == 0 || n >= self.len() {
            return Err(HarnessError::InvalidSpec(format!(
                "split point {n} must fall strictly inside {} examples",
                self.len()
            )));
        }
        let (head, tail) = match &self.examples {
            Examples::Ranked(v) => {
                let (a, b) = v.split_at(n);
                (Examples::Ranked(a.to_vec()), Examples::Ranked(b.to_vec()))
            }
            Examples::Labeled(v) => {
                let (a, b) = v.split_at(n);
                (Examples::Labeled(a.to_vec()), Examples::Labeled(b.to_vec()))
            }
        };
        let make = |examples| Dataset {
            task: self.task,
            vocab: self.vocab.clone(),
            examples,
        };
        Ok((make(head), make(tail)))
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir)?;
        let meta = Meta {
            task: self.task,
            size: self.len(),
        };
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        fs::write(dir.join("vocab.json"), self.vocab.to_json())?;
        let mut lines = String::new();
        match &self.examples {
            Examples::Ranked(v) => {
                for ex in v {
                    lines.push_str(&serde_json::to_string(ex)?);
                    lines.push('\n');
                }
            }
            Examples::Labeled(v) => {
                for ex in v {
                    lines.push_str(&serde_json::to_string(ex)?);
                    lines.push('\n');
                }
            }
        }
        fs::write(dir.join("data.jsonl"), lines)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let meta: Meta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let vocab = Vocab::from_json(&fs::read_to_string(dir.join("vocab.json"))?)?;
        let data = fs::read_to_string(dir.join("data.jsonl"))?;
        let examples = if meta.task.is_ranked() {
            let mut v = Vec::new();
            for (i, line) in data.lines().enumerate() {
                v.push(serde_json::from_str(line).map_err(|source| {
                    HarnessError::MalformedRecord { line: i + 1, source }
                })?);
            }
            Examples::Ranked(v)
        } else {
            let mut v = Vec::new();
            for (i, line) in data.lines().enumerate() {
                v.push(serde_json::from_str(line).map_err(|source| {
                    HarnessError::MalformedRecord { line: i + 1, source }
                })?);
            }
            Examples::Labeled(v)
        };
        let ds = Dataset {
            task: meta.task,
            vocab,
            examples,
        };
        if ds.len() != meta.size {
            return Err(HarnessError::BatchShape(format!(
                "meta.json declares {} examples but data.jsonl holds {}",
                meta.size,
                ds.len()
            )));
        }
        Ok(ds)
    }
}
