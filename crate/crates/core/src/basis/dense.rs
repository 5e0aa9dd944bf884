//! Materialized equivariant bases indexed by set partitions.
//!
//! A basis tensor for a map between order-`k_in` and order-`k_out`
//! representations on `m` nodes has shape `m^k_out x m^k_in`. Element `p`
//! is supported on the (output, input) multi-index pairs whose joint
//! equality pattern is exactly `p`, output positions first. Every tensor is
//! row-normalized so that the nonzero input weights of an output cell sum to
//! one.

use std::collections::HashMap;

use super::partition::{enumerate_partitions, SetPartition};
use crate::error::{Error, Result};

pub(crate) fn pow(m: usize, k: usize) -> usize {
    m.pow(k as u32)
}

/// Row-major digits of `flat` in base `m`, `k` digits.
pub fn unflatten(mut flat: usize, k: usize, m: usize) -> Vec<usize> {
    let mut digits = vec![0; k];
    for d in digits.iter_mut().rev() {
        *d = flat % m;
        flat /= m;
    }
    digits
}

pub fn flatten(digits: &[usize], m: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * m + d)
}

fn normalize_rows(tensor: &mut [f64], cols: usize) {
    for row in tensor.chunks_mut(cols.max(1)) {
        let count = row.iter().filter(|&&v| v != 0.0).count();
        if count > 0 {
            let w = 1.0 / count as f64;
            row.iter_mut().filter(|v| **v != 0.0).for_each(|v| *v = w);
        }
    }
}

/// Applies `sum_p B_p (x W_p)` for a family of dense basis tensors.
///
/// `x` is `cols x c_in`, `weights` is `len x c_in x c_out`, the result is
/// `rows x c_out`.
pub fn apply_weighted(
    tensors: &[Vec<f64>],
    rows: usize,
    cols: usize,
    x: &[f64],
    weights: &[f64],
    c_in: usize,
    c_out: usize,
) -> Result<Vec<f64>> {
    if x.len() != cols * c_in {
        return Err(Error::shape(format!(
            "input has {} values, expected {cols} x {c_in}",
            x.len()
        )));
    }
    if weights.len() != tensors.len() * c_in * c_out {
        return Err(Error::shape(format!(
            "weights have {} values, expected {} x {c_in} x {c_out}",
            weights.len(),
            tensors.len()
        )));
    }
    let mut out = vec![0.0; rows * c_out];
    for (p, tensor) in tensors.iter().enumerate() {
        let w = &weights[p * c_in * c_out..(p + 1) * c_in * c_out];
        for o in 0..rows {
            for j in 0..cols {
                let b = tensor[o * cols + j];
                if b == 0.0 {
                    continue;
                }
                for ci in 0..c_in {
                    let xv = b * x[j * c_in + ci];
                    for co in 0..c_out {
                        out[o * c_out + co] += xv * w[ci * c_out + co];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Basis of the permutation-equivariant maps from order `k_in` to order
/// `k_out` on `size` nodes.
#[derive(Clone, Debug)]
pub struct BasisSet {
    pub k_in: usize,
    pub k_out: usize,
    pub size: usize,
    pub partitions: Vec<SetPartition>,
    /// One `rows() x cols()` row-major tensor per partition.
    pub tensors: Vec<Vec<f64>>,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn rows(&self) -> usize {
        pow(self.size, self.k_out)
    }

    pub fn cols(&self) -> usize {
        pow(self.size, self.k_in)
    }

    /// Single-channel application of element `p`.
    pub fn apply(&self, p: usize, x: &[f64]) -> Vec<f64> {
        let (rows, cols) = (self.rows(), self.cols());
        let t = &self.tensors[p];
        (0..rows)
            .map(|o| (0..cols).map(|j| t[o * cols + j] * x[j]).sum())
            .collect()
    }

    /// `sum_p B_p (x W_p)` with `x: cols x c_in`, `weights: len x c_in x c_out`.
    pub fn apply_layer(&self, x: &[f64], weights: &[f64], c_in: usize, c_out: usize) -> Result<Vec<f64>> {
        apply_weighted(&self.tensors, self.rows(), self.cols(), x, weights, c_in, c_out)
    }

    /// Nonzero entries as (element, output multi-index, input multi-index, value).
    pub fn nonzeros(&self) -> Vec<(usize, Vec<usize>, Vec<usize>, f64)> {
        nonzeros(&self.tensors, self.k_in, self.k_out, self.size)
    }

    /// Dimension of the span of the basis tensors.
    pub fn span_dimension(&self) -> usize {
        super::oracle::matrix_rank(&self.tensors)
    }
}

fn nonzeros(
    tensors: &[Vec<f64>],
    k_in: usize,
    k_out: usize,
    m: usize,
) -> Vec<(usize, Vec<usize>, Vec<usize>, f64)> {
    let cols = pow(m, k_in);
    let mut out = Vec::new();
    for (p, t) in tensors.iter().enumerate() {
        for (flat, &v) in t.iter().enumerate() {
            if v != 0.0 {
                let (o, j) = (flat / cols.max(1), flat % cols.max(1));
                out.push((p, unflatten(o, k_out, m), unflatten(j, k_in, m), v));
            }
        }
    }
    out
}

/// Builds the partition-indexed basis for `k_in -> k_out` maps on `m` nodes.
///
/// All `Bell(k_in + k_out)` tensors are emitted even when `m` is too small
/// for some patterns to occur; those tensors are zero.
pub fn build_basis(k_in: usize, k_out: usize, m: usize) -> Result<BasisSet> {
    if m == 0 {
        return Err(Error::input("basis size must be at least 1"));
    }
    let partitions = enumerate_partitions(k_in + k_out);
    let index: HashMap<&SetPartition, usize> =
        partitions.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let (rows, cols) = (pow(m, k_out), pow(m, k_in));
    let mut tensors = vec![vec![0.0; rows * cols]; partitions.len()];
    let mut values = vec![0usize; k_in + k_out];
    for o in 0..rows {
        values[..k_out].copy_from_slice(&unflatten(o, k_out, m));
        for j in 0..cols {
            values[k_out..].copy_from_slice(&unflatten(j, k_in, m));
            let p = index[&SetPartition::pattern_of(&values)];
            tensors[p][o * cols + j] = 1.0;
        }
    }
    for t in &mut tensors {
        normalize_rows(t, cols);
    }
    Ok(BasisSet {
        k_in,
        k_out,
        size: m,
        partitions,
        tensors,
    })
}

/// What a block of a restricted-basis pattern is pinned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockLabel {
    /// Ranges over the nodes that keep their permutation symmetry.
    Kept,
    /// Fixed to one specific dropped node.
    Dropped(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RestrictedElement {
    pub partition: SetPartition,
    /// One label per block of `partition`.
    pub labels: Vec<BlockLabel>,
}

/// Basis of the maps equivariant only to permutations that fix every
/// dropped node.
#[derive(Clone, Debug)]
pub struct RestrictedBasisSet {
    pub k_in: usize,
    pub k_out: usize,
    pub size: usize,
    pub dropped: Vec<usize>,
    pub elements: Vec<RestrictedElement>,
    pub tensors: Vec<Vec<f64>>,
}

impl RestrictedBasisSet {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn rows(&self) -> usize {
        pow(self.size, self.k_out)
    }

    pub fn cols(&self) -> usize {
        pow(self.size, self.k_in)
    }

    pub fn kept(&self) -> Vec<usize> {
        (0..self.size).filter(|i| !self.dropped.contains(i)).collect()
    }

    pub fn apply_layer(&self, x: &[f64], weights: &[f64], c_in: usize, c_out: usize) -> Result<Vec<f64>> {
        apply_weighted(&self.tensors, self.rows(), self.cols(), x, weights, c_in, c_out)
    }

    pub fn nonzeros(&self) -> Vec<(usize, Vec<usize>, Vec<usize>, f64)> {
        nonzeros(&self.tensors, self.k_in, self.k_out, self.size)
    }

    pub fn span_dimension(&self) -> usize {
        super::oracle::matrix_rank(&self.tensors)
    }

    /// Index of the element whose every block is [`BlockLabel::Kept`], for
    /// each partition in enumeration order.
    pub fn kept_elements(&self) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.labels.iter().all(|l| *l == BlockLabel::Kept))
            .map(|(i, _)| i)
            .collect()
    }
}

fn labelings(blocks: usize, dropped: &[usize]) -> Vec<Vec<BlockLabel>> {
    let choices: Vec<BlockLabel> = std::iter::once(BlockLabel::Kept)
        .chain(dropped.iter().map(|&d| BlockLabel::Dropped(d)))
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(blocks);
    fn rec(
        blocks: usize,
        choices: &[BlockLabel],
        current: &mut Vec<BlockLabel>,
        out: &mut Vec<Vec<BlockLabel>>,
    ) {
        if current.len() == blocks {
            out.push(current.clone());
            return;
        }
        for &c in choices {
            // a dropped node can pin at most one block
            if c != BlockLabel::Kept && current.contains(&c) {
                continue;
            }
            current.push(c);
            rec(blocks, choices, current, out);
            current.pop();
        }
    }
    rec(blocks, &choices, &mut current, &mut out);
    out
}

/// Builds the basis for the representation restricted to the stabilizer of
/// the `dropped` nodes.
pub fn build_restricted_basis(
    k_in: usize,
    k_out: usize,
    m: usize,
    dropped: &[usize],
) -> Result<RestrictedBasisSet> {
    if m == 0 {
        return Err(Error::input("basis size must be at least 1"));
    }
    let mut dropped: Vec<usize> = dropped.to_vec();
    dropped.sort_unstable();
    dropped.dedup();
    if let Some(&bad) = dropped.iter().find(|&&d| d >= m) {
        return Err(Error::input(format!(
            "dropped node {bad} is outside 0..{m}"
        )));
    }
    if dropped.len() == m {
        return Err(Error::Degenerate(format!(
            "all {m} nodes dropped; no permutation symmetry remains"
        )));
    }
    let mut elements = Vec::new();
    for p in enumerate_partitions(k_in + k_out) {
        for labels in labelings(p.num_blocks(), &dropped) {
            elements.push(RestrictedElement {
                partition: p.clone(),
                labels,
            });
        }
    }
    let index: HashMap<RestrictedElement, usize> = elements
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();
    let (rows, cols) = (pow(m, k_out), pow(m, k_in));
    let mut tensors = vec![vec![0.0; rows * cols]; elements.len()];
    let mut values = vec![0usize; k_in + k_out];
    for o in 0..rows {
        values[..k_out].copy_from_slice(&unflatten(o, k_out, m));
        for j in 0..cols {
            values[k_out..].copy_from_slice(&unflatten(j, k_in, m));
            let partition = SetPartition::pattern_of(&values);
            let mut labels = vec![BlockLabel::Kept; partition.num_blocks()];
            for (pos, &v) in values.iter().enumerate() {
                if dropped.binary_search(&v).is_ok() {
                    labels[partition.block_of(pos)] = BlockLabel::Dropped(v);
                }
            }
            let e = index[&RestrictedElement { partition, labels }];
            tensors[e][o * cols + j] = 1.0;
        }
    }
    for t in &mut tensors {
        normalize_rows(t, cols);
    }
    Ok(RestrictedBasisSet {
        k_in,
        k_out,
        size: m,
        dropped,
        elements,
        tensors,
    })
}
