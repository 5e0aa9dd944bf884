//! Max-aggregation message passing baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::weights::DenseLayer;
use crate::autodiff::{Backward, ReduceKind, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::{ConcreteGraph, FeatureEncoding};

/// `h_v <- relu(h_v S + max_{u ~ v} h_u M + b)`, mean over nodes, then a
/// linear map to class logits.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxPoolMpnn {
    pub encoding: FeatureEncoding,
    /// `(self, message)` affine maps per layer; the message bias is unused.
    pub layers: Vec<(DenseLayer, DenseLayer)>,
    pub readout: DenseLayer,
}

struct MaxAggregate {
    /// Source row per (node, channel), `None` for isolated nodes.
    argmax: Vec<Option<usize>>,
    channels: usize,
}

impl Backward for MaxAggregate {
    fn backward(&self, inputs: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let mut g = vec![0.0; inputs[0].numel()];
        for (i, src) in self.argmax.iter().enumerate() {
            if let Some(u) = src {
                g[u * self.channels + i % self.channels] += grad[i];
            }
        }
        vec![Some(g)]
    }
}

fn max_aggregate(tape: &mut Tape, g: &ConcreteGraph, h: Var) -> Var {
    let c = tape.value(h).shape()[1];
    let data = tape.value(h).data();
    let n = g.num_nodes();
    let mut out = vec![0.0; n * c];
    let mut argmax = vec![None; n * c];
    for v in 0..n {
        for ch in 0..c {
            let mut best: Option<(usize, f64)> = None;
            for &u in g.neighbors(v) {
                let x = data[u * c + ch];
                if best.map_or(true, |(_, b)| x > b) {
                    best = Some((u, x));
                }
            }
            if let Some((u, x)) = best {
                out[v * c + ch] = x;
                argmax[v * c + ch] = Some(u);
            }
        }
    }
    let t = Tensor::matrix(n, c, out).expect("n x c buffer");
    tape.custom(&[h], t, Box::new(MaxAggregate { argmax, channels: c }))
}

impl MaxPoolMpnn {
    pub fn new(encoding: FeatureEncoding, widths: &[usize], classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut w_in = encoding.channels();
        for &w in widths {
            layers.push((DenseLayer::init(w_in, w, &mut rng), DenseLayer::init(w_in, w, &mut rng)));
            w_in = w;
        }
        MaxPoolMpnn {
            encoding,
            layers,
            readout: DenseLayer::init(w_in, classes, &mut rng),
        }
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (s, m) in &self.layers {
            out.extend([s.weight.as_slice(), s.bias.as_slice(), m.weight.as_slice()]);
        }
        out.extend([self.readout.weight.as_slice(), self.readout.bias.as_slice()]);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for (s, m) in &mut self.layers {
            out.push(&mut s.weight);
            out.push(&mut s.bias);
            out.push(&mut m.weight);
        }
        out.push(&mut self.readout.weight);
        out.push(&mut self.readout.bias);
        out
    }

    /// Parameter leaves in [`MaxPoolMpnn::parameters`] order.
    pub fn register(&self, tape: &mut Tape, requires_grad: bool) -> Vec<Var> {
        let mut out = Vec::new();
        let mat = |tape: &mut Tape, d: &DenseLayer| {
            tape.leaf(
                Tensor::matrix(d.inputs, d.outputs, d.weight.clone())
                    .expect("dense shapes")
                    .requires_grad(requires_grad),
            )
        };
        for (s, m) in &self.layers {
            let ws = mat(tape, s);
            let bs = tape.leaf(Tensor::vector(s.bias.clone()).requires_grad(requires_grad));
            let wm = mat(tape, m);
            out.extend([ws, bs, wm]);
        }
        let wr = mat(tape, &self.readout);
        let br = tape.leaf(Tensor::vector(self.readout.bias.clone()).requires_grad(requires_grad));
        out.extend([wr, br]);
        out
    }

    /// Logit vector of `g` recorded on `tape`.
    pub fn forward(&self, tape: &mut Tape, g: &ConcreteGraph, params: &[Var]) -> Result<Var> {
        let n = g.num_nodes();
        if n == 0 {
            return Err(Error::input("cannot run a model on an empty graph"));
        }
        let c0 = self.encoding.channels();
        let mut x = vec![0.0; n * c0];
        for p in 0..n {
            self.encoding.encode_node(g, p, &mut x[p * c0..(p + 1) * c0])?;
        }
        let mut h = tape.constant(Tensor::matrix(n, c0, x)?);
        let ones = tape.constant(Tensor::vector(vec![1.0; n]));
        for l in 0..self.layers.len() {
            let (ws, bs, wm) = (params[3 * l], params[3 * l + 1], params[3 * l + 2]);
            let msg = max_aggregate(tape, g, h);
            let a = tape.contract(h, ws, "ni,io->no")?;
            let b = tape.contract(msg, wm, "ni,io->no")?;
            let bias = tape.contract(ones, bs, "n,o->no")?;
            let z = tape.add(a, b)?;
            let z = tape.add(z, bias)?;
            h = tape.relu(z);
        }
        let pooled = tape.reduce(h, &[0], ReduceKind::Mean)?;
        let k = 3 * self.layers.len();
        let z = tape.contract(pooled, params[k], "i,io->o")?;
        tape.add(z, params[k + 1])
    }

    pub fn logits(&self, g: &ConcreteGraph) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let params = self.register(&mut tape, false);
        let out = self.forward(&mut tape, g, &params)?;
        Ok(tape.value(out).data().to_vec())
    }
}
