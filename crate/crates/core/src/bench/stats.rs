use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{subgraph_size_histogram, ConcreteGraph};

/// Size histograms of k-hop subgraphs, one per k.
pub fn subgraph_histograms(graphs: &[ConcreteGraph], ks: &[usize]) -> Result<Vec<(usize, BTreeMap<usize, usize>)>> {
    ks.iter().map(|&k| Ok((k, subgraph_size_histogram(graphs, k)?))).collect()
}

/// Nodes whose k-hop subgraph is smaller than their connected component.
pub fn truncated_subgraphs(graphs: &[ConcreteGraph], k: usize) -> usize {
    let mut count = 0;
    for g in graphs {
        let comp = g.components();
        let sizes = g.component_sizes();
        for p in 0..g.num_nodes() {
            let ball = g.bfs(p, Some(k)).iter().filter(|d| d.is_some()).count();
            count += usize::from(ball != sizes[&comp[p]]);
        }
    }
    count
}
