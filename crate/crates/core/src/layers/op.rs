//! The fused equivariant layer: gather subgraph stacks, apply the basis
//! maps per size group, add equivariant biases, scatter back.

use std::sync::Arc;

use super::repspec::FeatureLayout;
use super::structure::{Group, Link, NeighbourhoodPlan};
use super::weights::LayerLayout;
use crate::autodiff::{Backward, Tensor};
use crate::basis::BasisCache;

fn pow(m: usize, k: usize) -> usize {
    m.pow(k as u32)
}

fn copy_links(links: &[Link], src: &[f64], dst: &mut [f64], c: usize, transpose: bool) {
    for l in links {
        let (d, s) = if transpose {
            (l.src as usize, l.dst as usize)
        } else {
            (l.dst as usize, l.src as usize)
        };
        let from = &src[s * c..(s + 1) * c];
        let to = &mut dst[d * c..(d + 1) * c];
        if l.w == 1.0 {
            to.iter_mut().zip(from).for_each(|(a, b)| *a += b);
        } else {
            to.iter_mut().zip(from).for_each(|(a, b)| *a += l.w * b);
        }
    }
}

/// Where a layer's results go.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Target {
    /// Back onto nodes and cells of the batch.
    Features,
    /// Summed per graph into a `graphs x c` embedding.
    Readout { graphs: usize },
}

pub(crate) struct EquivariantOp {
    pub plan: Arc<NeighbourhoodPlan>,
    pub layout: Arc<LayerLayout>,
    pub input: FeatureLayout,
    pub output: FeatureLayout,
    pub target: Target,
    pub input_needs_grad: bool,
}

impl EquivariantOp {
    fn out_len(&self) -> usize {
        match self.target {
            Target::Features => self.output.len(),
            Target::Readout { graphs } => graphs * self.output.spec.channels(0).unwrap_or(0),
        }
    }

    fn gather(&self, group: &Group, features: &[f64]) -> Vec<(usize, Vec<f64>)> {
        self.input
            .spec
            .entries()
            .iter()
            .map(|&(k, c)| {
                let (offset, _) = self.input.block(k).expect("order in layout");
                let src = &features[offset..offset + self.input.rows(k) * c];
                let mut x = vec![0.0; group.t * pow(group.m, k) * c];
                copy_links(&group.gather[k], src, &mut x, c, false);
                (k, x)
            })
            .collect()
    }

    fn scatter_links<'a>(&self, group: &'a Group, k_out: usize) -> &'a [Link] {
        match self.target {
            Target::Features => &group.scatter[k_out],
            Target::Readout { .. } => &group.readout,
        }
    }

    fn out_block(&self, k_out: usize) -> (usize, usize) {
        match self.target {
            Target::Features => {
                let (offset, c) = self.output.block(k_out).expect("order in layout");
                (offset, self.output.rows(k_out) * c)
            }
            Target::Readout { graphs } => (0, graphs * self.output.spec.channels(0).unwrap_or(0)),
        }
    }

    /// Runs the layer on packed `features` with per-bucket weight vectors.
    pub fn forward(&self, features: &[f64], weights: &[&[f64]]) -> Vec<f64> {
        let cache = BasisCache::global();
        let mut out = vec![0.0; self.out_len()];
        for group in &self.plan.groups {
            let w = weights[group.bucket];
            let xs = self.gather(group, features);
            for &(k_out, c_out) in self.layout.output.entries() {
                let mut y = vec![0.0; group.t * pow(group.m, k_out) * c_out];
                for (k_in, x) in &xs {
                    let block = self.layout.block(*k_in, k_out).expect("block in layout");
                    let c_in = block.c_in;
                    cache
                        .kernel(*k_in, k_out)
                        .forward(group.m, group.t, x, c_in, &w[block.range()], c_out, &mut y)
                        .expect("layout-consistent buffers");
                }
                add_bias(&mut y, &w[self.layout.bias(k_out).expect("bias").range()], k_out, group.m, c_out);
                let (offset, len) = self.out_block(k_out);
                copy_links(self.scatter_links(group, k_out), &y, &mut out[offset..offset + len], c_out, false);
            }
        }
        out
    }

    /// Gradients for the features and for each bucket's weights.
    pub fn backward_parts(&self, features: &[f64], weights: &[&[f64]], grad: &[f64]) -> (Option<Vec<f64>>, Vec<Vec<f64>>) {
        let cache = BasisCache::global();
        let mut dfeat = self.input_needs_grad.then(|| vec![0.0; features.len()]);
        let mut dw: Vec<Vec<f64>> = weights.iter().map(|w| vec![0.0; w.len()]).collect();
        for group in &self.plan.groups {
            let w = weights[group.bucket];
            let dwb = &mut dw[group.bucket];
            let xs = self.gather(group, features);
            let mut dxs: Vec<Vec<f64>> = xs.iter().map(|(_, x)| vec![0.0; x.len()]).collect();
            for &(k_out, c_out) in self.layout.output.entries() {
                let (offset, len) = self.out_block(k_out);
                let mut dy = vec![0.0; group.t * pow(group.m, k_out) * c_out];
                copy_links(self.scatter_links(group, k_out), &grad[offset..offset + len], &mut dy, c_out, true);
                let bias = self.layout.bias(k_out).expect("bias");
                bias_grad(&dy, &mut dwb[bias.range()], k_out, group.m, c_out);
                for ((k_in, x), dx) in xs.iter().zip(dxs.iter_mut()) {
                    let block = self.layout.block(*k_in, k_out).expect("block in layout");
                    cache
                        .kernel(*k_in, k_out)
                        .backward(
                            group.m,
                            group.t,
                            x,
                            block.c_in,
                            &w[block.range()],
                            c_out,
                            &dy,
                            dfeat.is_some().then_some(dx.as_mut_slice()),
                            Some(&mut dwb[block.range()]),
                        )
                        .expect("layout-consistent buffers");
                }
            }
            if let Some(df) = dfeat.as_mut() {
                for ((k, dx), &(_, c)) in xs.iter().map(|(k, _)| *k).zip(&dxs).zip(self.input.spec.entries()) {
                    let (offset, _) = self.input.block(k).expect("order in layout");
                    let len = self.input.rows(k) * c;
                    copy_links(&group.gather[k], dx, &mut df[offset..offset + len], c, true);
                }
            }
        }
        (dfeat, dw)
    }
}

/// Order 0 and 1 outputs get one constant per channel; order 2 outputs get
/// a diagonal constant and a constant on every cell.
pub(crate) fn add_bias(y: &mut [f64], bias: &[f64], k_out: usize, m: usize, c: usize) {
    let cells = pow(m, k_out);
    for (i, row) in y.chunks_mut(c).enumerate() {
        let cell = i % cells;
        if k_out == 2 {
            let diag = cell / m == cell % m;
            for (ch, v) in row.iter_mut().enumerate() {
                *v += bias[c + ch] + if diag { bias[ch] } else { 0.0 };
            }
        } else {
            row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
        }
    }
}

fn bias_grad(dy: &[f64], db: &mut [f64], k_out: usize, m: usize, c: usize) {
    let cells = pow(m, k_out);
    for (i, row) in dy.chunks(c).enumerate() {
        let cell = i % cells;
        if k_out == 2 {
            let diag = cell / m == cell % m;
            for (ch, v) in row.iter().enumerate() {
                db[c + ch] += v;
                if diag {
                    db[ch] += v;
                }
            }
        } else {
            db.iter_mut().zip(row).for_each(|(b, v)| *b += v);
        }
    }
}

impl Backward for EquivariantOp {
    fn backward(&self, inputs: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let weights: Vec<&[f64]> = inputs[1..].iter().map(|t| t.data()).collect();
        let (df, dw) = self.backward_parts(inputs[0].data(), &weights, grad);
        std::iter::once(df).chain(dw.into_iter().map(Some)).collect()
    }
}
