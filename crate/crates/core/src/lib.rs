//! Graph generation with Bures-Wasserstein flow matching.
//!
//! Graphs are read as Gaussian Markov random fields whose precision is the
//! (regularized) Laplacian. Optimal transport between these fields gives a
//! distance, a geodesic between graphs and its velocity, which drive a
//! flow-matching sampler in both a continuous and a discrete regime.

pub mod data;
pub mod denoiser;
pub mod error;
pub mod exec;
pub mod flow;
pub mod graph;
pub mod interp;
pub mod linalg;
pub mod metric;
pub mod rng;
pub mod stats;
pub mod velocity;

pub use error::{BwError, Result};
pub use exec::Exec;
pub use graph::{Graph, GraphMrf};
pub use linalg::SymMatrix;
