use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs_rows}x{lhs_cols} and {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("{op}: invalid shape {rows}x{cols}")]
    BadShape { op: &'static str, rows: usize, cols: usize },

    #[error("{op}: range {start}..{end} out of bounds for size {len}")]
    RangeOutOfBounds { op: &'static str, start: usize, end: usize, len: usize },

    #[error("{op}: index {index} out of range for size {size}")]
    IndexOutOfRange { op: &'static str, index: usize, size: usize },

    #[error("softmax input contains NaN")]
    NanInput,

    #[error("backward already ran on this graph")]
    BackwardAlreadyRun,

    #[error("loss must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLenMismatch { rows: usize, cols: usize, len: usize },
}
