//! Named parameter storage, deterministic initialization, and checkpoint
//! conversion.
//!
//! Parameters live in a stable, name-ordered list so that optimizer state,
//! checkpoints, and gradient collection all agree on one layout.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tensor_core::{Matrix, NamedArray};

use crate::config::ModelConfig;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    /// Uniform in [-limit, limit] with limit = sqrt(6 / (fan_in + fan_out)).
    Xavier,
    /// Uniform in [-0.05, 0.05]; used for embedding-like tables.
    Table,
    Zeros,
    Ones,
}

/// Every parameter the config calls for, in canonical order.
fn layout(config: &ModelConfig) -> Vec<(String, [usize; 2], Init)> {
    let d = config.d_model;
    let v = config.vocab_size;
    let m = config.bridge_tokens;
    let rows = config.span_rows();
    let hidden = 4 * d;
    let mut out = Vec::new();
    out.push(("embed.tok".to_string(), [v, d], Init::Table));
    out.push(("embed.pos".to_string(), [rows, d], Init::Table));
    if m > 0 {
        out.push(("bridge.init".to_string(), [m, d], Init::Table));
    }
    for i in 0..config.num_layers {
        for w in ["wq", "wk", "wv", "wo"] {
            out.push((format!("layer{i}.attn.{w}"), [d, d], Init::Xavier));
        }
        for b in ["bq", "bk", "bv", "bo"] {
            out.push((format!("layer{i}.attn.{b}"), [1, d], Init::Zeros));
        }
        out.push((format!("layer{i}.ln1.gain"), [1, d], Init::Ones));
        out.push((format!("layer{i}.ln1.bias"), [1, d], Init::Zeros));
        out.push((format!("layer{i}.ffn.w1"), [d, hidden], Init::Xavier));
        out.push((format!("layer{i}.ffn.b1"), [1, hidden], Init::Zeros));
        out.push((format!("layer{i}.ffn.w2"), [hidden, d], Init::Xavier));
        out.push((format!("layer{i}.ffn.b2"), [1, d], Init::Zeros));
        out.push((format!("layer{i}.ln2.gain"), [1, d], Init::Ones));
        out.push((format!("layer{i}.ln2.bias"), [1, d], Init::Zeros));
    }
    if config.knn_k > 0 {
        out.push(("knn.gate".to_string(), [1, config.num_heads], Init::Zeros));
    }
    out.push(("head.out.w".to_string(), [d, v], Init::Xavier));
    out.push(("head.out.b".to_string(), [1, v], Init::Zeros));
    out.push(("head.cls.w".to_string(), [2 * d, 1], Init::Xavier));
    out.push(("head.cls.b".to_string(), [1, 1], Init::Zeros));
    out
}

/// Hashes the seed and parameter name into one stream seed, so each parameter
/// draws from its own rng regardless of creation order.
fn stream_seed(seed: u64, name: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in seed.to_le_bytes().into_iter().chain(name.bytes()) {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

fn init_matrix(name: &str, shape: [usize; 2], kind: Init, seed: u64) -> Matrix {
    let [rows, cols] = shape;
    match kind {
        Init::Zeros => Matrix::zeros(rows, cols),
        Init::Ones => Matrix::filled(rows, cols, 1.0),
        Init::Xavier | Init::Table => {
            let limit = match kind {
                Init::Xavier => (6.0 / (rows + cols) as f64).sqrt(),
                _ => 0.05,
            };
            let mut rng = ChaCha20Rng::seed_from_u64(stream_seed(seed, name));
            let mut out = Matrix::zeros(rows, cols);
            for value in out.data_mut() {
                *value = limit * (2.0 * rng.random::<f64>() - 1.0);
            }
            out
        }
    }
}

/// Ordered collection of named parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    entries: Vec<(String, Matrix)>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    /// Builds a freshly initialized store for `config`.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut store = Self {
            entries: Vec::new(),
            index: HashMap::new(),
        };
        for (name, shape, kind) in layout(config) {
            let matrix = init_matrix(&name, shape, kind, seed);
            store.index.insert(name.clone(), store.entries.len());
            store.entries.push((name, matrix));
        }
        store
    }

    /// Checks that the store holds exactly the parameters `config` calls for.
    pub fn validate_for(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let expected = layout(config);
        for (name, shape, _) in &expected {
            let matrix = self.get(name).ok_or_else(|| ModelError::MissingParam {
                name: name.clone(),
            })?;
            let got = [matrix.rows(), matrix.cols()];
            if got != *shape {
                return Err(ModelError::ParamShape {
                    name: name.clone(),
                    expected: *shape,
                    got,
                });
            }
        }
        if self.entries.len() != expected.len() {
            let known: HashMap<&str, ()> =
                expected.iter().map(|(n, _, _)| (n.as_str(), ())).collect();
            for (name, _) in &self.entries {
                if !known.contains_key(name.as_str()) {
                    return Err(ModelError::UnexpectedParam { name: name.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.index.get(name).map(|&i| &mut self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.entries.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|(_, m)| m.len()).sum()
    }

    pub fn to_named_arrays(&self) -> Vec<NamedArray> {
        self.entries
            .iter()
            .map(|(name, matrix)| {
                NamedArray::new(
                    name.clone(),
                    [matrix.rows(), matrix.cols()],
                    matrix.data().to_vec(),
                )
            })
            .collect()
    }

    pub fn from_named_arrays(arrays: Vec<NamedArray>) -> Result<Self, ModelError> {
        let mut store = Self {
            entries: Vec::new(),
            index: HashMap::new(),
        };
        for array in arrays {
            let [rows, cols] = array.shape;
            let matrix = Matrix::from_vec(rows, cols, array.data)?;
            if store.index.contains_key(&array.name) {
                return Err(ModelError::UnexpectedParam { name: array.name });
            }
            store.index.insert(array.name.clone(), store.entries.len());
            store.entries.push((array.name, matrix));
        }
        Ok(store)
    }
}
