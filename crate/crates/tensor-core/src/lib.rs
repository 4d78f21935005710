//! Define-by-run reverse-mode automatic differentiation over 2-D `f64`
//! matrices, plus a flat binary checkpoint format for named arrays.
//!
//! A [`Graph`] owns every intermediate value of one forward pass; ops return
//! lightweight [`Tensor`] handles. Calling [`Graph::backward`] on a scalar
//! loss walks the tape in reverse, skipping subgraphs that cannot reach a
//! gradient-requiring leaf. A graph is single-shot: build, run backward once,
//! read gradients, drop.

mod checkpoint;
mod error;
mod graph;
mod matrix;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError, NamedArray};
pub use error::TensorError;
pub use graph::{Graph, Tensor};
pub use matrix::Matrix;
