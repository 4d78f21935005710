use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAGIC: &[u8; 8] = b"EXPOCKP1";

/// A named 2-D array as stored in a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: [usize; 2], data: Vec<f64>) -> Self {
        Self { name: name.into(), shape, data }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("not a checkpoint file (bad magic)")]
    BadMagic,

    #[error("malformed header: {0}")]
    BadHeader(String),

    #[error("array {name}: shape {rows}x{cols} does not cover {count} elements")]
    ShapeCount { name: String, rows: usize, cols: usize, count: usize },

    #[error("payload truncated: expected {need} elements, found {have}")]
    Truncated { need: usize, have: usize },
}

#[derive(Serialize, Deserialize)]
struct Header {
    arrays: Vec<ArrayEntry>,
}

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: [usize; 2],
    /// Offset into the payload, in f64 elements.
    offset: usize,
    count: usize,
}

/// Write arrays to `path`: an 8-byte magic, a little-endian `u64` header
/// length, a JSON header describing each array, then every value as
/// little-endian `f64` in header order.
pub fn write_checkpoint(path: &Path, arrays: &[NamedArray]) -> Result<(), CheckpointError> {
    for a in arrays {
        if a.shape[0] * a.shape[1] != a.data.len() {
            return Err(CheckpointError::ShapeCount {
                name: a.name.clone(),
                rows: a.shape[0],
                cols: a.shape[1],
                count: a.data.len(),
            });
        }
    }
    let mut offset = 0;
    let entries: Vec<ArrayEntry> = arrays
        .iter()
        .map(|a| {
            let e = ArrayEntry {
                name: a.name.clone(),
                shape: a.shape,
                offset,
                count: a.data.len(),
            };
            offset += a.data.len();
            e
        })
        .collect();
    let header =
        serde_json::to_vec(&Header { arrays: entries }).map_err(std::io::Error::other)?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for a in arrays {
        for v in &a.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(path: &Path) -> Result<Vec<NamedArray>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| CheckpointError::BadMagic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)
        .map_err(|_| CheckpointError::BadHeader("missing length".into()))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| CheckpointError::BadHeader("header shorter than declared".into()))?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| CheckpointError::BadHeader(e.to_string()))?;

    let mut payload_bytes = Vec::new();
    r.read_to_end(&mut payload_bytes)?;
    if payload_bytes.len() % 8 != 0 {
        return Err(CheckpointError::Truncated {
            need: payload_bytes.len().div_ceil(8),
            have: payload_bytes.len() / 8,
        });
    }
    let payload: Vec<f64> = payload_bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk is 8 bytes")))
        .collect();

    let mut out = Vec::with_capacity(header.arrays.len());
    for e in header.arrays {
        if e.shape[0] * e.shape[1] != e.count {
            return Err(CheckpointError::ShapeCount {
                name: e.name,
                rows: e.shape[0],
                cols: e.shape[1],
                count: e.count,
            });
        }
        let end = e.offset.checked_add(e.count).ok_or(CheckpointError::Truncated {
            need: usize::MAX,
            have: payload.len(),
        })?;
        if end > payload.len() {
            return Err(CheckpointError::Truncated { need: end, have: payload.len() });
        }
        out.push(NamedArray { name: e.name, shape: e.shape, data: payload[e.offset..end].to_vec() });
    }
    Ok(out)
}
