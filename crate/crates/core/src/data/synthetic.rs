use crate::error::Result;
use crate::graph::ConcreteGraph;

use super::TUDataset;

/// Two classes separable by degree statistics: triangles carrying a
/// pendant tail of 0..=3 nodes (class 0) and paths of 3..=6 nodes
/// (class 1). `per_class` graphs of each class, with node ids running on
/// across graphs as in a TU file.
pub fn triangles_vs_paths(per_class: usize) -> Result<TUDataset> {
    let mut graphs = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    let mut next = 1;
    for i in 0..per_class {
        let tail = i % 4;
        let n = 3 + tail;
        let ids: Vec<usize> = (next..next + n).collect();
        let mut edges = vec![(ids[0], ids[1]), (ids[1], ids[2]), (ids[2], ids[0])];
        for t in 0..tail {
            edges.push((ids[2 + t], ids[3 + t]));
        }
        graphs.push(ConcreteGraph::new(ids, &edges, vec![0; n])?);
        labels.push(0);
        next += n;

        let n = 3 + i % 4;
        let ids: Vec<usize> = (next..next + n).collect();
        let edges: Vec<(usize, usize)> = ids.windows(2).map(|w| (w[0], w[1])).collect();
        graphs.push(ConcreteGraph::new(ids, &edges, vec![0; n])?);
        labels.push(1);
        next += n;
    }
    Ok(TUDataset {
        name: "TRIPATH".into(),
        graphs,
        labels,
        num_classes: 2,
        node_label_classes: 0,
        edge_label_classes: 0,
        provenance: Vec::new(),
    })
}
