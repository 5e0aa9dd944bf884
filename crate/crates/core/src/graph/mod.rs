//! Concrete graphs, k-hop subgraphs, permutations and isomorphism oracles.

mod concrete;
mod dense;
mod iso;
mod permutation;
mod subgraph;

pub use concrete::ConcreteGraph;
pub use dense::{permute_graph, DenseGraphTensor, FeatureEncoding, NodeFeatures};
pub use iso::{brute_force_isomorphic, wl_indistinguishable, wl_refine, ISOMORPHISM_MAX_NODES};
pub use permutation::Permutation;
pub use subgraph::{khop_at, khop_subgraph, subgraph_size_histogram, SubGraph, SubgraphMode};
