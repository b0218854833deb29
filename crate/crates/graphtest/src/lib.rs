//! Nonparametric two-sample hypothesis testing for random graphs.
//!
//! Pipeline: estimate latent positions of each graph by adjacency spectral
//! embedding, align the two embeddings (the embedding is only identified up
//! to an orthogonal transform), pool them into one labeled sample, and test
//! label/position dependence with distance correlation or multiscale graph
//! correlation under a permutation null.

pub mod error;
pub mod rng;
pub mod graph;
pub mod embedding;
pub mod stats;
pub mod alignment;
pub mod sim;
pub mod pipeline;
pub mod datasets;
pub mod svg;
pub mod cli;
pub mod reference;

pub use error::{Error, Result};
pub use graph::{AdjacencyMatrix, GraphFormat, LatentPositions, LoadOptions, LoadedGraph};
pub use rng::RngSeed;
