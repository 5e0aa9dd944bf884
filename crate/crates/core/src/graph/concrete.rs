use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};

/// An undirected graph over arbitrary natural-number node ids.
///
/// Nodes are held internally at positions `0..n` in ascending id order;
/// most accessors speak positions, `ids()` maps back.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcreteGraph {
    ids: Vec<usize>,
    index: HashMap<usize, usize>,
    adj: Vec<Vec<usize>>,
    node_labels: Vec<usize>,
    edge_labels: Option<HashMap<(usize, usize), usize>>,
}

impl ConcreteGraph {
    /// `labels[i]` belongs to `ids[i]`. Edges are symmetrized and deduplicated.
    pub fn new(ids: Vec<usize>, edges: &[(usize, usize)], labels: Vec<usize>) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::input(format!(
                "{} node ids but {} labels",
                ids.len(),
                labels.len()
            )));
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&i| ids[i]);
        let sorted: Vec<usize> = order.iter().map(|&i| ids[i]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("duplicate node id"));
        }
        let node_labels = order.iter().map(|&i| labels[i]).collect();
        let index: HashMap<usize, usize> = sorted.iter().enumerate().map(|(p, &id)| (id, p)).collect();
        let mut adj = vec![Vec::new(); sorted.len()];
        for &(a, b) in edges {
            let (pa, pb) = match (index.get(&a), index.get(&b)) {
                (Some(&pa), Some(&pb)) => (pa, pb),
                _ => return Err(Error::input(format!("edge ({a}, {b}) references an unknown node"))),
            };
            if pa == pb {
                return Err(Error::input(format!("self-loop on node {a}")));
            }
            adj[pa].push(pb);
            adj[pb].push(pa);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(ConcreteGraph {
            ids: sorted,
            index,
            adj,
            node_labels,
            edge_labels: None,
        })
    }

    /// Attaches edge labels given by id pairs. Both directions get the label.
    pub fn with_edge_labels(mut self, labels: &[((usize, usize), usize)]) -> Result<Self> {
        let mut map = HashMap::new();
        for &((a, b), l) in labels {
            let (pa, pb) = (self.position_of(a)?, self.position_of(b)?);
            if !self.has_edge(pa, pb) {
                return Err(Error::input(format!("label for missing edge ({a}, {b})")));
            }
            map.insert((pa, pb), l);
            map.insert((pb, pa), l);
        }
        self.edge_labels = Some(map);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.ids.len()
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn id(&self, pos: usize) -> usize {
        self.ids[pos]
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn position_of(&self, id: usize) -> Result<usize> {
        self.position(id)
            .ok_or_else(|| Error::input(format!("node {id} is not in the graph")))
    }

    pub fn neighbors(&self, pos: usize) -> &[usize] {
        &self.adj[pos]
    }

    pub fn degree(&self, pos: usize) -> usize {
        self.adj[pos].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn node_label(&self, pos: usize) -> usize {
        self.node_labels[pos]
    }

    pub fn node_labels(&self) -> &[usize] {
        &self.node_labels
    }

    pub fn has_edge_labels(&self) -> bool {
        self.edge_labels.is_some()
    }

    pub fn edge_label(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_labels.as_ref()?.get(&(a, b)).copied()
    }

    /// Undirected edges as position pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Undirected edges as id pairs.
    pub fn edge_ids(&self) -> Vec<(usize, usize)> {
        self.edges()
            .into_iter()
            .map(|(a, b)| (self.ids[a], self.ids[b]))
            .collect()
    }

    /// Same graph with every id replaced by `f(id)`; `f` must be injective.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Result<Self> {
        let ids: Vec<usize> = self.ids.iter().map(|&i| f(i)).collect();
        let edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (ids[a], ids[b]))
            .collect();
        let g = ConcreteGraph::new(ids.clone(), &edges, self.node_labels.clone())?;
        match &self.edge_labels {
            None => Ok(g),
            Some(map) => {
                let labels: Vec<((usize, usize), usize)> = map
                    .iter()
                    .map(|(&(a, b), &l)| ((ids[a], ids[b]), l))
                    .collect();
                g.with_edge_labels(&labels)
            }
        }
    }

    /// Hop distances from `src` (positions), `None` when unreachable.
    pub fn bfs(&self, src: usize, limit: Option<usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            if limit.is_some_and(|l| d >= l) {
                continue;
            }
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Component id per position, numbered in order of first position.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.num_nodes()];
        let mut next = 0;
        for s in 0..self.num_nodes() {
            if comp[s] != usize::MAX {
                continue;
            }
            for (v, d) in self.bfs(s, None).into_iter().enumerate() {
                if d.is_some() {
                    comp[v] = next;
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_sizes(&self) -> BTreeMap<usize, usize> {
        let mut sizes = BTreeMap::new();
        for c in self.components() {
            *sizes.entry(c).or_insert(0) += 1;
        }
        sizes
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes() > 0 && self.component_sizes().len() == 1
    }

    /// Largest finite eccentricity over all nodes.
    pub fn diameter(&self) -> usize {
        (0..self.num_nodes())
            .flat_map(|s| self.bfs(s, None).into_iter().flatten())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noncontiguous_ids_and_symmetry() {
        let g = ConcreteGraph::new(vec![40, 7, 12], &[(7, 40), (40, 7), (12, 40)], vec![1, 0, 2]).unwrap();
        assert_eq!(g.ids(), &[7, 12, 40]);
        assert_eq!(g.node_labels(), &[0, 2, 1]);
        assert_eq!(g.num_edges(), 2);
        assert!(g.has_edge(0, 2) && g.has_edge(2, 0));
        assert_eq!(g.diameter(), 2);
        assert!(g.is_connected());
    }

    #[test]
    fn rejects_unknown_endpoints() {
        assert!(ConcreteGraph::new(vec![1, 2], &[(1, 3)], vec![0, 0]).is_err());
        assert!(ConcreteGraph::new(vec![1, 1], &[], vec![0, 0]).is_err());
    }

    #[test]
    fn components_of_two_triangles() {
        let g = ConcreteGraph::new(
            (0..6).collect(),
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)],
            vec![0; 6],
        )
        .unwrap();
        assert_eq!(g.component_sizes().values().copied().collect::<Vec<_>>(), vec![3, 3]);
        assert!(!g.is_connected());
    }
}
