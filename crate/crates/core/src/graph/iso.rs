use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use super::concrete::ConcreteGraph;
use crate::basis::all_permutations;
use crate::error::{Error, Result};

pub const ISOMORPHISM_MAX_NODES: usize = 8;

/// Exhaustive search for a label- and edge-preserving bijection.
pub fn brute_force_isomorphic(g1: &ConcreteGraph, g2: &ConcreteGraph) -> Result<bool> {
    let n = g1.num_nodes();
    if n > ISOMORPHISM_MAX_NODES || g2.num_nodes() > ISOMORPHISM_MAX_NODES {
        return Err(Error::usage(format!(
            "brute-force isomorphism is limited to {ISOMORPHISM_MAX_NODES} nodes"
        )));
    }
    if n != g2.num_nodes() || g1.num_edges() != g2.num_edges() {
        return Ok(false);
    }
    let mut l1 = g1.node_labels().to_vec();
    let mut l2 = g2.node_labels().to_vec();
    l1.sort_unstable();
    l2.sort_unstable();
    if l1 != l2 {
        return Ok(false);
    }
    let edges = g1.edges();
    Ok(all_permutations(n).into_iter().any(|f| {
        (0..n).all(|p| g1.node_label(p) == g2.node_label(f[p]))
            && edges.iter().all(|&(a, b)| {
                g2.has_edge(f[a], f[b]) && g1.edge_label(a, b) == g2.edge_label(f[a], f[b])
            })
    }))
}

fn digest(value: impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

/// Colour histogram after `iterations` rounds of 1-WL refinement.
///
/// Colours are content hashes of (own colour, sorted neighbour colours), so
/// histograms of different graphs are directly comparable.
pub fn wl_refine(g: &ConcreteGraph, iterations: usize) -> BTreeMap<u64, usize> {
    let n = g.num_nodes();
    let mut colors: Vec<u64> = (0..n).map(|p| digest(("init", g.node_label(p)))).collect();
    for _ in 0..iterations {
        colors = (0..n)
            .map(|p| {
                let mut around: Vec<(u64, Option<usize>)> = g
                    .neighbors(p)
                    .iter()
                    .map(|&q| (colors[q], g.edge_label(p, q)))
                    .collect();
                around.sort_unstable();
                digest((colors[p], around))
            })
            .collect();
    }
    let mut hist = BTreeMap::new();
    for c in colors {
        *hist.entry(c).or_insert(0) += 1;
    }
    hist
}

/// 1-WL verdict after refining both graphs to stability.
pub fn wl_indistinguishable(g1: &ConcreteGraph, g2: &ConcreteGraph) -> bool {
    let rounds = g1.num_nodes().max(g2.num_nodes()).max(1);
    wl_refine(g1, rounds) == wl_refine(g2, rounds)
}
