//! Shared oracles for tests: finite-difference gradients and a plainly
//! written reference transformer forward pass. Everything here is
//! implemented with bare loops over `Vec<f64>`, independent of the graph
//! machinery it is used to check.

pub mod fd;
pub mod vanilla;
