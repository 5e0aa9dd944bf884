//! Locally permutation-equivariant graph networks.
//!
//! Graphs are split into k-hop subgraphs, each subgraph is updated by a
//! linear map that commutes with permutations of its nodes, and the results
//! are stitched back into global node and edge features.

pub mod autodiff;
pub mod basis;
pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod graph;
pub mod layers;
pub mod report;
pub mod train;

pub use error::{Error, Result};
