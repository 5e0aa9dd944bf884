use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::basis_count;
use super::repspec::RepSpec;

/// Equivariant bias terms per output order: order 2 has a diagonal and a
/// full term, lower orders a single constant.
pub fn bias_elements(k_out: usize) -> usize {
    if k_out == 2 {
        2
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightBlock {
    pub k_in: usize,
    pub k_out: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub offset: usize,
}

impl WeightBlock {
    pub fn basis_len(&self) -> usize {
        basis_count(self.k_in, self.k_out)
    }

    pub fn len(&self) -> usize {
        self.basis_len() * self.c_in * self.c_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasBlock {
    pub k_out: usize,
    pub c_out: usize,
    pub offset: usize,
}

impl BiasBlock {
    pub fn len(&self) -> usize {
        bias_elements(self.k_out) * self.c_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Flat layout of one bucket's weights: for each output order ascending,
/// for each input order ascending, a `basis x c_in x c_out` block; bias
/// blocks (`elements x c_out`) follow all weight blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerLayout {
    pub input: RepSpec,
    pub output: RepSpec,
    pub blocks: Vec<WeightBlock>,
    pub biases: Vec<BiasBlock>,
    pub len: usize,
}

impl LayerLayout {
    pub fn new(input: &RepSpec, output: &RepSpec) -> Self {
        let mut offset = 0;
        let mut blocks = Vec::new();
        for &(k_out, c_out) in output.entries() {
            for &(k_in, c_in) in input.entries() {
                let b = WeightBlock {
                    k_in,
                    k_out,
                    c_in,
                    c_out,
                    offset,
                };
                offset += b.len();
                blocks.push(b);
            }
        }
        let mut biases = Vec::new();
        for &(k_out, c_out) in output.entries() {
            let b = BiasBlock { k_out, c_out, offset };
            offset += b.len();
            biases.push(b);
        }
        LayerLayout {
            input: input.clone(),
            output: output.clone(),
            blocks,
            biases,
            len: offset,
        }
    }

    pub fn block(&self, k_in: usize, k_out: usize) -> Option<&WeightBlock> {
        self.blocks.iter().find(|b| b.k_in == k_in && b.k_out == k_out)
    }

    pub fn bias(&self, k_out: usize) -> Option<&BiasBlock> {
        self.biases.iter().find(|b| b.k_out == k_out)
    }

    /// Random weights: zero-mean normal with variance `1 / fan_in`, where
    /// `fan_in` counts basis elements times input channels feeding an
    /// output order. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut w = vec![0.0; self.len];
        for &(k_out, _) in self.output.entries() {
            let fan_in: usize = self
                .blocks
                .iter()
                .filter(|b| b.k_out == k_out)
                .map(|b| b.basis_len() * b.c_in)
                .sum();
            let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("positive variance");
            for b in self.blocks.iter().filter(|b| b.k_out == k_out) {
                for v in &mut w[b.range()] {
                    *v = normal.sample(rng);
                }
            }
        }
        w
    }
}

/// Weights of one equivariant layer, one flat vector per size bucket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivariantLayerWeights {
    pub buckets: Vec<Vec<f64>>,
}

/// Affine map `x W + b` with `W` stored `inputs x outputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    /// He-normal weights, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive variance");
        DenseLayer {
            inputs,
            outputs,
            weight: (0..inputs * outputs).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }
}
