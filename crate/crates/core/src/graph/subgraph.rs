use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::concrete::ConcreteGraph;
use crate::error::{Error, Result};

/// Which parent edges a subgraph keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgraphMode {
    /// Every parent edge among the ball's nodes.
    #[default]
    Induced,
    /// Only edges with the center as an endpoint.
    CenterStar,
}

/// k-hop neighbourhood of one node with its own local indexing.
#[derive(Clone, Debug, PartialEq)]
pub struct SubGraph {
    pub center: usize,
    /// Global ids; index 0 is the center, the rest ascend.
    pub nodes: Vec<usize>,
    /// Parent positions, aligned with `nodes`.
    pub positions: Vec<usize>,
    /// Local undirected edges `(a, b)` with `a < b`.
    pub edges: Vec<(usize, usize)>,
    pub k: usize,
}

impl SubGraph {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Local index of a parent position.
    pub fn local_index(&self, pos: usize) -> Option<usize> {
        if self.positions[0] == pos {
            return Some(0);
        }
        self.positions[1..].binary_search(&pos).ok().map(|i| i + 1)
    }

    pub fn to_graph(&self, parent: &ConcreteGraph) -> Result<ConcreteGraph> {
        let labels = self.positions.iter().map(|&p| parent.node_label(p)).collect();
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (self.nodes[a], self.nodes[b]))
            .collect();
        ConcreteGraph::new(self.nodes.clone(), &edges, labels)
    }
}

/// Ball of radius `k` around the node with id `center`.
pub fn khop_subgraph(g: &ConcreteGraph, center: usize, k: usize, mode: SubgraphMode) -> Result<SubGraph> {
    let c = g.position_of(center)?;
    khop_at(g, c, k, mode)
}

/// As [`khop_subgraph`] with the center given as a parent position.
pub fn khop_at(g: &ConcreteGraph, c: usize, k: usize, mode: SubgraphMode) -> Result<SubGraph> {
    if k == 0 {
        return Err(Error::input("hop count k must be at least 1"));
    }
    let dist = g.bfs(c, Some(k));
    // positions ascend with ids, so this keeps the id order
    let mut positions = vec![c];
    positions.extend((0..g.num_nodes()).filter(|&p| p != c && dist[p].is_some()));
    let sub = SubGraph {
        center: g.id(c),
        nodes: positions.iter().map(|&p| g.id(p)).collect(),
        positions,
        edges: Vec::new(),
        k,
    };
    let mut edges = Vec::new();
    for (a, &pa) in sub.positions.iter().enumerate() {
        for &pb in g.neighbors(pa) {
            if let Some(b) = sub.local_index(pb) {
                let keep = match mode {
                    SubgraphMode::Induced => true,
                    SubgraphMode::CenterStar => a == 0 || b == 0,
                };
                if keep && a < b {
                    edges.push((a, b));
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(SubGraph { edges, ..sub })
}

/// Subgraph size -> number of nodes whose k-ball has that size.
pub fn subgraph_size_histogram(graphs: &[ConcreteGraph], k: usize) -> Result<BTreeMap<usize, usize>> {
    if k == 0 {
        return Err(Error::input("hop count k must be at least 1"));
    }
    let mut hist = BTreeMap::new();
    for g in graphs {
        for p in 0..g.num_nodes() {
            let size = g.bfs(p, Some(k)).iter().filter(|d| d.is_some()).count();
            *hist.entry(size).or_insert(0) += 1;
        }
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(ids: &[usize]) -> ConcreteGraph {
        let edges: Vec<_> = ids.windows(2).map(|w| (w[0], w[1])).collect();
        ConcreteGraph::new(ids.to_vec(), &edges, vec![0; ids.len()]).unwrap()
    }

    #[test]
    fn triangle_ball_is_whole_graph() {
        let g = ConcreteGraph::new(vec![5, 9, 2], &[(5, 9), (9, 2), (2, 5)], vec![0; 3]).unwrap();
        let s = khop_subgraph(&g, 5, 1, SubgraphMode::Induced).unwrap();
        assert_eq!(s.nodes, vec![5, 2, 9]);
        assert_eq!(s.edges.len(), 3);
        let star = khop_subgraph(&g, 5, 1, SubgraphMode::CenterStar).unwrap();
        assert_eq!(star.edges, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn path_end_sees_one_neighbor() {
        let g = path(&[1, 2, 3]);
        let s = khop_subgraph(&g, 1, 1, SubgraphMode::Induced).unwrap();
        assert_eq!(s.nodes, vec![1, 2]);
        assert_eq!(s.edges, vec![(0, 1)]);
        assert_eq!(s.local_index(1), Some(1));
        assert_eq!(s.local_index(2), None);
    }

    #[test]
    fn histogram_small_cases() {
        let tri = ConcreteGraph::new(vec![0, 1, 2], &[(0, 1), (1, 2), (2, 0)], vec![0; 3]).unwrap();
        let h = subgraph_size_histogram(&[tri], 1).unwrap();
        assert_eq!(h, BTreeMap::from([(3, 3)]));
        let h = subgraph_size_histogram(&[path(&[0, 1, 2])], 1).unwrap();
        assert_eq!(h, BTreeMap::from([(2, 2), (3, 1)]));
    }

    #[test]
    fn errors() {
        let g = path(&[0, 1]);
        assert!(khop_subgraph(&g, 7, 1, SubgraphMode::Induced).is_err());
        assert!(khop_subgraph(&g, 0, 0, SubgraphMode::Induced).is_err());
    }
}
