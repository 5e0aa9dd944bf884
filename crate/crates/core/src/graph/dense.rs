use serde::{Deserialize, Serialize};

use super::concrete::ConcreteGraph;
use super::permutation::Permutation;
use crate::error::{Error, Result};

/// Order-2 features `m x m x c`: diagonal cells carry node features,
/// off-diagonal cells carry edge features, channel 0 is adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGraphTensor {
    pub size: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl DenseGraphTensor {
    pub fn zeros(size: usize, channels: usize) -> Self {
        DenseGraphTensor {
            size,
            channels,
            data: vec![0.0; size * size * channels],
        }
    }

    pub fn new(size: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size * channels {
            return Err(Error::shape(format!(
                "{} values for a {size} x {size} x {channels} tensor",
                data.len()
            )));
        }
        Ok(DenseGraphTensor { size, channels, data })
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let at = (i * self.size + j) * self.channels;
        &self.data[at..at + self.channels]
    }

    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let at = (i * self.size + j) * self.channels;
        &mut self.data[at..at + self.channels]
    }
}

/// `out[s(i), s(j), :] = t[i, j, :]`.
pub fn permute_graph(t: &DenseGraphTensor, sigma: &Permutation) -> Result<DenseGraphTensor> {
    if sigma.size() != t.size {
        return Err(Error::input(format!(
            "permutation of size {} applied to a {}-node tensor",
            sigma.size(),
            t.size
        )));
    }
    let mut out = DenseGraphTensor::zeros(t.size, t.channels);
    for i in 0..t.size {
        for j in 0..t.size {
            out.cell_mut(sigma.apply(i), sigma.apply(j))
                .copy_from_slice(t.cell(i, j));
        }
    }
    Ok(out)
}

/// How node information becomes diagonal channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFeatures {
    /// One-hot of the categorical node label.
    Labels { classes: usize },
    /// A constant 1 followed by a one-hot of `min(degree, cap)`.
    Degree { cap: usize },
}

impl NodeFeatures {
    pub fn width(&self) -> usize {
        match *self {
            NodeFeatures::Labels { classes } => classes,
            NodeFeatures::Degree { cap } => cap + 2,
        }
    }
}

/// Channel layout: adjacency, node block, then edge-label block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub node: NodeFeatures,
    pub edge_classes: usize,
}

impl FeatureEncoding {
    pub fn channels(&self) -> usize {
        1 + self.node.width() + self.edge_classes
    }

    /// Writes node `p`'s diagonal cell.
    pub fn encode_node(&self, g: &ConcreteGraph, p: usize, cell: &mut [f64]) -> Result<()> {
        match self.node {
            NodeFeatures::Labels { classes } => {
                let l = g.node_label(p);
                if l >= classes {
                    return Err(Error::input(format!(
                        "node label {l} outside the {classes} encoded classes"
                    )));
                }
                cell[1 + l] = 1.0;
            }
            NodeFeatures::Degree { cap } => {
                cell[1] = 1.0;
                cell[2 + g.degree(p).min(cap)] = 1.0;
            }
        }
        Ok(())
    }

    /// Writes the off-diagonal cell of the edge `u -> v`.
    pub fn encode_edge(&self, g: &ConcreteGraph, u: usize, v: usize, cell: &mut [f64]) -> Result<()> {
        cell[0] = 1.0;
        if self.edge_classes > 0 {
            if let Some(l) = g.edge_label(u, v) {
                if l >= self.edge_classes {
                    return Err(Error::input(format!(
                        "edge label {l} outside the {} encoded classes",
                        self.edge_classes
                    )));
                }
                cell[1 + self.node.width() + l] = 1.0;
            }
        }
        Ok(())
    }

    pub fn encode(&self, g: &ConcreteGraph) -> Result<DenseGraphTensor> {
        let n = g.num_nodes();
        let mut t = DenseGraphTensor::zeros(n, self.channels());
        for p in 0..n {
            self.encode_node(g, p, t.cell_mut(p, p))?;
        }
        for (a, b) in g.edges() {
            self.encode_edge(g, a, b, t.cell_mut(a, b))?;
            self.encode_edge(g, b, a, t.cell_mut(b, a))?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn permutation_matches_index_remap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = (0..5 * 5 * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = DenseGraphTensor::new(5, 2, data).unwrap();
        let s = Permutation::random(5, &mut rng);
        let p = permute_graph(&t, &s).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for c in 0..2 {
                    assert_eq!(p.data[(s.apply(i) * 5 + s.apply(j)) * 2 + c], t.data[(i * 5 + j) * 2 + c]);
                }
            }
        }
        assert_eq!(permute_graph(&p, &s.inverse()).unwrap(), t);
        assert!(permute_graph(&t, &Permutation::identity(4)).is_err());
    }

    #[test]
    fn encoding_layout() {
        let g = ConcreteGraph::new(vec![3, 8], &[(3, 8)], vec![1, 0])
            .unwrap()
            .with_edge_labels(&[((3, 8), 2)])
            .unwrap();
        let enc = FeatureEncoding {
            node: NodeFeatures::Labels { classes: 2 },
            edge_classes: 3,
        };
        let t = enc.encode(&g).unwrap();
        assert_eq!(t.channels, 6);
        assert_eq!(t.cell(0, 0), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.cell(1, 0), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let deg = FeatureEncoding {
            node: NodeFeatures::Degree { cap: 0 },
            edge_classes: 0,
        };
        assert_eq!(deg.encode(&g).unwrap().cell(0, 0), &[0.0, 1.0, 1.0]);
    }
}
