//! Per-document hint memory: append-only per-head key/value entries with
//! exact top-K inner-product retrieval.
//!
//! Entries are written once per hint token per attention head and never
//! mutated; search ranks by raw inner product, breaking ties toward the
//! earlier insertion. The bank is scoped to one document and reset between
//! documents.

use std::collections::BinaryHeap;
use std::io::Write;

use hint_extract::HintKind;
use serde::Serialize;
use tensor_core::{Matrix, NamedArray};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BankError {
    #[error("expected {expected} per-head matrices, got {got}")]
    HeadCountMismatch { expected: usize, got: usize },

    #[error("head {head}: matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        head: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("kind vector has length {got}, expected {expected}")]
    KindLenMismatch { expected: usize, got: usize },

    #[error("position {position} is flagged as a hint but has no kind")]
    KindMissing { position: usize },

    #[error("head {head} out of range for {heads} heads")]
    HeadOutOfRange { head: usize, heads: usize },
}

/// One cached hint token for one head.
#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub key: Vec<f64>,
    pub value: Vec<f64>,
    pub snippet_index: usize,
    pub token_index: usize,
    pub kind: HintKind,
}

/// A retrieval result: entry position within the head plus its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ranked {
    score: f64,
    index: usize,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Higher score ranks higher; equal scores rank the earlier entry higher.
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Append-only per-head hint store for one document.
#[derive(Debug, Clone)]
pub struct HintBank {
    num_heads: usize,
    head_dim: usize,
    scope_id: String,
    heads: Vec<Vec<BankEntry>>,
}

impl HintBank {
    pub fn new(num_heads: usize, head_dim: usize, scope_id: impl Into<String>) -> Self {
        Self {
            num_heads,
            head_dim,
            scope_id: scope_id.into(),
            heads: vec![Vec::new(); num_heads],
        }
    }

    pub fn num_heads(&self) -> usize {
        self.num_heads
    }

    pub fn head_dim(&self) -> usize {
        self.head_dim
    }

    pub fn scope_id(&self) -> &str {
        &self.scope_id
    }

    pub fn len(&self, head: usize) -> usize {
        self.heads[head].len()
    }

    pub fn total_len(&self) -> usize {
        self.heads.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.iter().all(Vec::is_empty)
    }

    pub fn entry(&self, head: usize, index: usize) -> &BankEntry {
        &self.heads[head][index]
    }

    pub fn entries(&self, head: usize) -> &[BankEntry] {
        &self.heads[head]
    }

    /// Append one entry per flagged position per head.
    ///
    /// `keys[h]` and `values[h]` hold the head-`h` projections for one
    /// snippet, one row per position; `mask` and `kinds` are aligned with
    /// those rows. Within each head, rows append in ascending position order.
    /// Returns the number of entries added: `popcount(mask) * num_heads`.
    pub fn write(
        &mut self,
        snippet_index: usize,
        keys: &[Matrix],
        values: &[Matrix],
        mask: &[bool],
        kinds: &[Option<HintKind>],
    ) -> Result<usize, BankError> {
        for got in [keys.len(), values.len()] {
            if got != self.num_heads {
                return Err(BankError::HeadCountMismatch { expected: self.num_heads, got });
            }
        }
        if kinds.len() != mask.len() {
            return Err(BankError::KindLenMismatch { expected: mask.len(), got: kinds.len() });
        }
        for (h, (k, v)) in keys.iter().zip(values).enumerate() {
            for m in [k, v] {
                if m.rows() != mask.len() || m.cols() != self.head_dim {
                    return Err(BankError::ShapeMismatch {
                        head: h,
                        rows: m.rows(),
                        cols: m.cols(),
                        expected_rows: mask.len(),
                        expected_cols: self.head_dim,
                    });
                }
            }
        }
        for (t, &flag) in mask.iter().enumerate() {
            if flag && kinds[t].is_none() {
                return Err(BankError::KindMissing { position: t });
            }
        }

        let mut added = 0;
        for h in 0..self.num_heads {
            for (t, &flag) in mask.iter().enumerate() {
                if !flag {
                    continue;
                }
                self.heads[h].push(BankEntry {
                    key: keys[h].row(t).to_vec(),
                    value: values[h].row(t).to_vec(),
                    snippet_index,
                    token_index: t,
                    kind: kinds[t].expect("checked above"),
                });
                added += 1;
            }
        }
        Ok(added)
    }

    /// Exact top-`k` entries of `head` by inner product with `query`,
    /// ordered by descending score with ties broken toward earlier entries.
    pub fn knn_search(&self, head: usize, query: &[f64], k: usize) -> Result<Vec<SearchHit>, BankError> {
        if head >= self.num_heads {
            return Err(BankError::HeadOutOfRange { head, heads: self.num_heads });
        }
        let entries = &self.heads[head];
        if k == 0 || entries.is_empty() {
            return Ok(Vec::new());
        }
        let mut heap: BinaryHeap<std::cmp::Reverse<Ranked>> = BinaryHeap::with_capacity(k);
        for (index, entry) in entries.iter().enumerate() {
            let score = dot(query, &entry.key);
            let candidate = Ranked { score, index };
            if heap.len() < k {
                heap.push(std::cmp::Reverse(candidate));
            } else if candidate > heap.peek().expect("heap non-empty").0 {
                heap.pop();
                heap.push(std::cmp::Reverse(candidate));
            }
        }
        let mut ranked: Vec<Ranked> = heap.into_iter().map(|r| r.0).collect();
        ranked.sort_by(|a, b| b.cmp(a));
        Ok(ranked.into_iter().map(|r| SearchHit { index: r.index, score: r.score }).collect())
    }

    /// Clear all entries and adopt a new document scope.
    pub fn reset(&mut self, scope_id: impl Into<String>) {
        self.scope_id = scope_id.into();
        for head in &mut self.heads {
            head.clear();
        }
    }

    /// One JSON object per entry, heads in order, insertion order within.
    pub fn snapshot_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            head: usize,
            index: usize,
            snippet: usize,
            token: usize,
            kind: HintKind,
            key: &'a [f64],
            value: &'a [f64],
        }
        for (h, entries) in self.heads.iter().enumerate() {
            for (i, e) in entries.iter().enumerate() {
                let record = Record {
                    head: h,
                    index: i,
                    snippet: e.snippet_index,
                    token: e.token_index,
                    kind: e.kind,
                    key: &e.key,
                    value: &e.value,
                };
                serde_json::to_writer(&mut w, &record).map_err(std::io::Error::other)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Binary snapshot as named arrays: per head, stacked keys, values, and a
    /// metadata matrix of (snippet, token, kind ordinal) rows.
    pub fn to_named_arrays(&self) -> Vec<NamedArray> {
        let mut arrays = Vec::new();
        for (h, entries) in self.heads.iter().enumerate() {
            let n = entries.len();
            let mut keys = Vec::with_capacity(n * self.head_dim);
            let mut values = Vec::with_capacity(n * self.head_dim);
            let mut meta = Vec::with_capacity(n * 3);
            for e in entries {
                keys.extend_from_slice(&e.key);
                values.extend_from_slice(&e.value);
                meta.push(e.snippet_index as f64);
                meta.push(e.token_index as f64);
                meta.push(kind_ordinal(e.kind) as f64);
            }
            arrays.push(NamedArray::new(format!("head{h}.keys"), [n, self.head_dim], keys));
            arrays.push(NamedArray::new(format!("head{h}.values"), [n, self.head_dim], values));
            arrays.push(NamedArray::new(format!("head{h}.meta"), [n, 3], meta));
        }
        arrays
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn kind_ordinal(kind: HintKind) -> usize {
    match kind {
        HintKind::ImportStatement => 0,
        HintKind::ClassDefinition => 1,
        HintKind::FunctionDefinition => 2,
        HintKind::FieldDefinition => 3,
        HintKind::LineComment => 4,
        HintKind::BlockComment => 5,
    }
}
