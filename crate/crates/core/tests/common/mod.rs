//! Straight-line reference for local and whole-graph layers: every
//! subgraph is materialized as dense tensors and pushed through the dense
//! basis matrices one at a time, without batching or packed layouts.

#![allow(dead_code)]

use lpegn::basis::build_basis;
use lpegn::graph::{khop_at, ConcreteGraph, FeatureEncoding, SubgraphMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-order dense features: order k holds `n^k x channels` values.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub spec: Vec<(usize, usize)>,
    pub x: Vec<Vec<f64>>,
}

impl Dense {
    pub fn block(&self, order: usize) -> Option<(&[f64], usize)> {
        let i = self.spec.iter().position(|s| s.0 == order)?;
        Some((&self.x[i], self.spec[i].1))
    }
}

pub fn input_features(g: &ConcreteGraph, enc: &FeatureEncoding) -> Dense {
    let t = enc.encode(g).unwrap();
    Dense {
        n: g.num_nodes(),
        spec: vec![(2, enc.channels())],
        x: vec![t.data],
    }
}

fn bell(k: usize) -> usize {
    [1, 1, 2, 5, 15][k]
}

/// Offsets of each weight block and bias block in one bucket's flat
/// parameter vector: outputs outer, inputs inner, biases last.
fn offsets(input: &[(usize, usize)], output: &[(usize, usize)]) -> (Vec<(usize, usize, usize)>, Vec<(usize, usize)>) {
    let mut off = 0;
    let mut w = Vec::new();
    for &(ko, co) in output {
        for &(ki, ci) in input {
            w.push((ki, ko, off));
            off += bell(ki + ko) * ci * co;
        }
    }
    let mut b = Vec::new();
    for &(ko, co) in output {
        b.push((ko, off));
        off += if ko == 2 { 2 } else { 1 } * co;
    }
    (w, b)
}

fn pow(m: usize, k: usize) -> usize {
    (0..k).map(|_| m).product()
}

/// Dense local map on one subgraph of size `m`.
fn local_map(
    m: usize,
    xs: &[(usize, usize, Vec<f64>)],
    output: &[(usize, usize)],
    input: &[(usize, usize)],
    w: &[f64],
) -> Vec<Vec<f64>> {
    let (wo, bo) = offsets(input, output);
    output
        .iter()
        .map(|&(ko, co)| {
            let rows = pow(m, ko);
            let mut y = vec![0.0; rows * co];
            for (ki, ci, x) in xs {
                let (ki, ci) = (*ki, *ci);
                let cols = pow(m, ki);
                let off = wo.iter().find(|b| b.0 == ki && b.1 == ko).unwrap().2;
                let basis = build_basis(ki, ko, m).unwrap();
                for (p, t) in basis.tensors.iter().enumerate() {
                    for o in 0..rows {
                        for j in 0..cols {
                            let b = t[o * cols + j];
                            if b == 0.0 {
                                continue;
                            }
                            for a in 0..ci {
                                for c in 0..co {
                                    y[o * co + c] += b * x[j * ci + a] * w[off + (p * ci + a) * co + c];
                                }
                            }
                        }
                    }
                }
            }
            let boff = bo.iter().find(|b| b.0 == ko).unwrap().1;
            for o in 0..rows {
                let diag = ko == 2 && o / m == o % m;
                for c in 0..co {
                    if ko == 2 {
                        // element 0 on the diagonal, element 1 everywhere
                        y[o * co + c] += w[boff + co + c] + if diag { w[boff + c] } else { 0.0 };
                    } else {
                        y[o * co + c] += w[boff + c];
                    }
                }
            }
            y
        })
        .collect()
}

fn gather(x: &Dense, nodes: &[usize], center: usize, global: bool) -> Vec<(usize, usize, Vec<f64>)> {
    let (n, m) = (x.n, nodes.len());
    x.spec
        .iter()
        .zip(&x.x)
        .map(|(&(k, c), data)| {
            let v = match k {
                0 if global => {
                    let mut mean = vec![0.0; c];
                    for p in 0..n {
                        for a in 0..c {
                            mean[a] += data[p * c + a] / n as f64;
                        }
                    }
                    mean
                }
                0 => data[center * c..(center + 1) * c].to_vec(),
                1 => nodes.iter().flat_map(|&p| data[p * c..(p + 1) * c].to_vec()).collect(),
                _ => {
                    let mut out = Vec::with_capacity(m * m * c);
                    for &u in nodes {
                        for &v in nodes {
                            out.extend_from_slice(&data[(u * n + v) * c..(u * n + v + 1) * c]);
                        }
                    }
                    out
                }
            };
            (k, c, v)
        })
        .collect()
}

pub enum Scope {
    Local(usize),
    Global,
}

/// One layer. Order-2 cells other than the diagonal and graph edges are
/// zeroed when `sparse`. `relu` is applied when `hidden`. For a readout
/// layer (output order 0 only) returns the per-graph embedding in `x[0]`
/// with `n = 1`.
pub fn reference_layer(
    g: &ConcreteGraph,
    x: &Dense,
    output: &[(usize, usize)],
    weights: &dyn Fn(usize) -> Vec<f64>,
    scope: &Scope,
    sparse: bool,
    hidden: bool,
) -> Dense {
    let n = g.num_nodes();
    let readout = !hidden;
    // order 0 is stored once per node
    let mut out: Vec<Vec<f64>> = output.iter().map(|&(k, c)| vec![0.0; pow(n, k.max(1)) * c]).collect();
    let mut embedding = vec![0.0; output[0].1];
    let centers: Vec<(usize, Vec<usize>)> = match scope {
        Scope::Local(k) => (0..n)
            .map(|c| (c, khop_at(g, c, *k, SubgraphMode::Induced).unwrap().positions))
            .collect(),
        Scope::Global => vec![(usize::MAX, (0..n).collect())],
    };
    let global = matches!(scope, Scope::Global);
    for (center, nodes) in centers {
        let m = nodes.len();
        let xs = gather(x, &nodes, center, global);
        let ys = local_map(m, &xs, output, &x.spec, &weights(m));
        for ((&(k, c), y), o) in output.iter().zip(&ys).zip(&mut out) {
            if readout {
                for a in 0..c {
                    embedding[a] += y[a];
                }
                continue;
            }
            if global {
                match k {
                    0 => (0..n).for_each(|p| o[p * c..(p + 1) * c].copy_from_slice(y)),
                    _ => o.copy_from_slice(y),
                }
                continue;
            }
            match k {
                0 => o[center * c..(center + 1) * c].copy_from_slice(y),
                1 => o[center * c..(center + 1) * c].copy_from_slice(&y[..c]),
                _ => {
                    for a in 0..c {
                        o[(center * n + center) * c + a] = y[a];
                    }
                    for (b, &pb) in nodes.iter().enumerate().skip(1) {
                        if !g.has_edge(center, pb) {
                            continue;
                        }
                        for a in 0..c {
                            o[(center * n + pb) * c + a] += 0.5 * y[b * c + a];
                            o[(pb * n + center) * c + a] += 0.5 * y[(b * m) * c + a];
                        }
                    }
                }
            }
        }
    }
    if readout {
        return Dense {
            n: 1,
            spec: vec![output[0]],
            x: vec![embedding],
        };
    }
    for (&(k, c), o) in output.iter().zip(&mut out) {
        if k == 2 && sparse {
            for u in 0..n {
                for v in 0..n {
                    if u != v && !g.has_edge(u, v) {
                        o[(u * n + v) * c..(u * n + v + 1) * c].fill(0.0);
                    }
                }
            }
        }
        if hidden {
            o.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    Dense {
        n,
        spec: output.to_vec(),
        x: out,
    }
}

/// Random connected graph: a random tree plus extra edges, with ids
/// scattered over a larger range.
pub fn random_connected(n: usize, extra: f64, labels: usize, rng: &mut ChaCha8Rng) -> ConcreteGraph {
    let mut ids: Vec<usize> = Vec::new();
    while ids.len() < n {
        let id = rng.gen_range(0..10 * n + 10);
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((ids[rng.gen_range(0..i)], ids[i]));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(extra) {
                edges.push((ids[i], ids[j]));
            }
        }
    }
    let l = (0..n).map(|_| rng.gen_range(0..labels.max(1))).collect();
    ConcreteGraph::new(ids, &edges, l).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest deviation between a dense reference and the model's stored
/// cells for every order of `spec`.
pub fn max_deviation(reference: &Dense, f: &lpegn::layers::GraphFeatures) -> f64 {
    let n = reference.n;
    let mut worst: f64 = 0.0;
    for (&(k, c), x) in reference.spec.iter().zip(&reference.x) {
        if k < 2 {
            for p in 0..n {
                let got = f.node(k, p).unwrap();
                for a in 0..c {
                    worst = worst.max((got[a] - x[p * c + a]).abs());
                }
            }
        } else {
            for u in 0..n {
                for v in 0..n {
                    let want = &x[(u * n + v) * c..(u * n + v + 1) * c];
                    match f.cell(u, v) {
                        Some(got) => {
                            for a in 0..c {
                                worst = worst.max((got[a] - want[a]).abs());
                            }
                        }
                        None => worst = worst.max(want.iter().fold(0.0, |m, v| m.max(v.abs()))),
                    }
                }
            }
        }
    }
    worst
}
