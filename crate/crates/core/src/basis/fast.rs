//! Applying a weighted partition basis without materializing it.
//!
//! The exact-pattern indicator `E_p` is rewritten by Möbius inversion as
//! `E_p = sum_{q >= p} mu(p, q) V_q`, where `V_q` only asks that positions
//! sharing a block of `q` carry equal values. `V_q` factors into a reduction
//! over the input-only blocks followed by a broadcast over the output-only
//! blocks, both of size `m^(blocks)`, so a whole layer costs
//! `O(sum_q m^|q| c)` plus one small GEMM per `q` instead of
//! `O(m^(k_in + k_out) c)` per element.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;

use super::dense::{build_basis, pow, BasisSet};
use super::partition::{enumerate_partitions, SetPartition};
use crate::autodiff::gemm::gemm_acc;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct Term {
    shared: usize,
    out_only: usize,
    in_only: usize,
    /// Variable of each output position: shared blocks first, then out-only.
    out_vars: Vec<usize>,
    /// Variable of each input position: shared blocks first, then in-only.
    in_vars: Vec<usize>,
    /// `(p, mu(p, q))` for every `p` refining this `q`.
    finer: Vec<(usize, f64)>,
}

/// Index pairs `(reduced, full)` enumerating every value assignment of a
/// term's variables.
fn index_pairs(shared: usize, free: usize, vars: &[usize], m: usize) -> Vec<(usize, usize)> {
    let nvars = shared + free;
    let mut full_coef = vec![0usize; nvars];
    for (pos, &v) in vars.iter().enumerate() {
        full_coef[v] += pow(m, vars.len() - 1 - pos);
    }
    let total = pow(m, nvars);
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; nvars];
    for _ in 0..total {
        let reduced = digits[..shared].iter().fold(0, |acc, &d| acc * m + d);
        let full = digits.iter().zip(&full_coef).map(|(d, c)| d * c).sum();
        out.push((reduced, full));
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < m {
                break;
            }
            *d = 0;
        }
    }
    out
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| n.saturating_sub(i) as f64).product()
}

/// Fast route for one `k_in -> k_out` order pair, valid at every size `m`.
#[derive(Clone, Debug)]
pub struct OrderPairKernel {
    pub k_in: usize,
    pub k_out: usize,
    pub partitions: Vec<SetPartition>,
    terms: Vec<Term>,
    out_blocks: Vec<usize>,
    in_only_blocks: Vec<usize>,
}

impl OrderPairKernel {
    pub fn new(k_in: usize, k_out: usize) -> Self {
        let partitions = enumerate_partitions(k_in + k_out);
        let mut out_blocks = Vec::new();
        let mut in_only_blocks = Vec::new();
        let mut terms = Vec::new();
        for q in &partitions {
            let nb = q.num_blocks();
            let mut has_out = vec![false; nb];
            let mut has_in = vec![false; nb];
            for pos in 0..k_out + k_in {
                if pos < k_out {
                    has_out[q.block_of(pos)] = true;
                } else {
                    has_in[q.block_of(pos)] = true;
                }
            }
            let mut var = vec![usize::MAX; nb];
            let mut shared = 0;
            for b in 0..nb {
                if has_out[b] && has_in[b] {
                    var[b] = shared;
                    shared += 1;
                }
            }
            let mut out_var = var.clone();
            let mut out_only = 0;
            let mut in_var = var;
            let mut in_only = 0;
            for b in 0..nb {
                if has_out[b] && !has_in[b] {
                    out_var[b] = shared + out_only;
                    out_only += 1;
                } else if has_in[b] && !has_out[b] {
                    in_var[b] = shared + in_only;
                    in_only += 1;
                }
            }
            out_blocks.push(shared + out_only);
            in_only_blocks.push(in_only);
            let finer = partitions
                .iter()
                .enumerate()
                .filter_map(|(pi, p)| p.mobius(q).map(|mu| (pi, mu)))
                .collect();
            terms.push(Term {
                shared,
                out_only,
                in_only,
                out_vars: (0..k_out).map(|pos| out_var[q.block_of(pos)]).collect(),
                in_vars: (k_out..k_out + k_in).map(|pos| in_var[q.block_of(pos)]).collect(),
                finer,
            });
        }
        OrderPairKernel {
            k_in,
            k_out,
            partitions,
            terms,
            out_blocks,
            in_only_blocks,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.partitions.len()
    }

    /// Nonzero count of every occupied row of element `p`'s indicator at
    /// size `m`; zero when the pattern cannot occur.
    pub fn normalizer(&self, p: usize, m: usize) -> f64 {
        let b_out = self.out_blocks[p];
        if b_out > m {
            return 0.0;
        }
        falling(m - b_out, self.in_only_blocks[p])
    }

    /// Per-term mixing weights `W~_q = sum_{p <= q} mu(p, q) / N_p W_p`.
    fn mixed_weights(&self, m: usize, w: &[f64], cw: usize) -> Vec<Vec<f64>> {
        let inv_norm: Vec<f64> = (0..self.partitions.len())
            .map(|p| {
                let n = self.normalizer(p, m);
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            })
            .collect();
        self.terms
            .iter()
            .map(|t| {
                let mut mixed = vec![0.0; cw];
                for &(p, mu) in &t.finer {
                    let coef = mu * inv_norm[p];
                    if coef != 0.0 {
                        for (a, b) in mixed.iter_mut().zip(&w[p * cw..(p + 1) * cw]) {
                            *a += coef * b;
                        }
                    }
                }
                mixed
            })
            .collect()
    }

    fn check(&self, m: usize, t: usize, x: &[f64], c_in: usize, w: &[f64], c_out: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::input("kernel size must be at least 1"));
        }
        if x.len() != t * pow(m, self.k_in) * c_in {
            return Err(Error::shape(format!(
                "kernel input has {} values, expected {t} x {}^{} x {c_in}",
                x.len(),
                m,
                self.k_in
            )));
        }
        if w.len() != self.partitions.len() * c_in * c_out {
            return Err(Error::shape(format!(
                "kernel weights have {} values, expected {} x {c_in} x {c_out}",
                w.len(),
                self.partitions.len()
            )));
        }
        Ok(())
    }

    fn reduce(&self, term: &Term, m: usize, t: usize, x: &[f64], c: usize) -> Vec<f64> {
        let pairs = index_pairs(term.shared, term.in_only, &term.in_vars, m);
        let (rs, xs) = (pow(m, term.shared), pow(m, self.k_in));
        let mut r = vec![0.0; t * rs * c];
        for s in 0..t {
            for &(ri, xi) in &pairs {
                let dst = &mut r[(s * rs + ri) * c..(s * rs + ri + 1) * c];
                let src = &x[(s * xs + xi) * c..(s * xs + xi + 1) * c];
                dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
            }
        }
        r
    }

    fn reduce_transpose(&self, term: &Term, m: usize, t: usize, dr: &[f64], c: usize, dx: &mut [f64]) {
        let pairs = index_pairs(term.shared, term.in_only, &term.in_vars, m);
        let (rs, xs) = (pow(m, term.shared), pow(m, self.k_in));
        for s in 0..t {
            for &(ri, xi) in &pairs {
                let src = &dr[(s * rs + ri) * c..(s * rs + ri + 1) * c];
                let dst = &mut dx[(s * xs + xi) * c..(s * xs + xi + 1) * c];
                dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
            }
        }
    }

    fn broadcast(&self, term: &Term, m: usize, t: usize, y: &[f64], c: usize, out: &mut [f64]) {
        let pairs = index_pairs(term.shared, term.out_only, &term.out_vars, m);
        let (rs, os) = (pow(m, term.shared), pow(m, self.k_out));
        for s in 0..t {
            for &(ri, oi) in &pairs {
                let src = &y[(s * rs + ri) * c..(s * rs + ri + 1) * c];
                let dst = &mut out[(s * os + oi) * c..(s * os + oi + 1) * c];
                dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
            }
        }
    }

    fn broadcast_transpose(&self, term: &Term, m: usize, t: usize, dout: &[f64], c: usize) -> Vec<f64> {
        let pairs = index_pairs(term.shared, term.out_only, &term.out_vars, m);
        let (rs, os) = (pow(m, term.shared), pow(m, self.k_out));
        let mut dy = vec![0.0; t * rs * c];
        for s in 0..t {
            for &(ri, oi) in &pairs {
                let src = &dout[(s * os + oi) * c..(s * os + oi + 1) * c];
                let dst = &mut dy[(s * rs + ri) * c..(s * rs + ri + 1) * c];
                dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
            }
        }
        dy
    }

    /// Adds `sum_p B_p (x W_p)` for `t` stacked size-`m` inputs into `out`.
    ///
    /// Layouts: `x` is `t x m^k_in x c_in`, `w` is `P x c_in x c_out`,
    /// `out` is `t x m^k_out x c_out`.
    #[allow(clippy::too_many_arguments)]
    pub fn forward(
        &self,
        m: usize,
        t: usize,
        x: &[f64],
        c_in: usize,
        w: &[f64],
        c_out: usize,
        out: &mut [f64],
    ) -> Result<()> {
        self.check(m, t, x, c_in, w, c_out)?;
        if out.len() != t * pow(m, self.k_out) * c_out {
            return Err(Error::shape("kernel output buffer has the wrong length"));
        }
        let mixed = self.mixed_weights(m, w, c_in * c_out);
        for (term, wq) in self.terms.iter().zip(&mixed) {
            if wq.iter().all(|&v| v == 0.0) {
                continue;
            }
            let r = self.reduce(term, m, t, x, c_in);
            let rows = t * pow(m, term.shared);
            let mut y = vec![0.0; rows * c_out];
            gemm_acc(rows, c_in, c_out, &r, false, wq, false, &mut y);
            self.broadcast(term, m, t, &y, c_out, out);
        }
        Ok(())
    }

    /// Accumulates gradients of `forward` given the output gradient `dout`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        m: usize,
        t: usize,
        x: &[f64],
        c_in: usize,
        w: &[f64],
        c_out: usize,
        dout: &[f64],
        mut dx: Option<&mut [f64]>,
        dw: Option<&mut [f64]>,
    ) -> Result<()> {
        self.check(m, t, x, c_in, w, c_out)?;
        let cw = c_in * c_out;
        let mixed = self.mixed_weights(m, w, cw);
        let inv_norm: Vec<f64> = (0..self.partitions.len())
            .map(|p| {
                let n = self.normalizer(p, m);
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            })
            .collect();
        let mut dw = dw;
        for (term, wq) in self.terms.iter().zip(&mixed) {
            let coefs: Vec<(usize, f64)> = term
                .finer
                .iter()
                .map(|&(p, mu)| (p, mu * inv_norm[p]))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            if coefs.is_empty() {
                continue;
            }
            let dy = self.broadcast_transpose(term, m, t, dout, c_out);
            let rows = t * pow(m, term.shared);
            if let Some(dw) = dw.as_deref_mut() {
                let r = self.reduce(term, m, t, x, c_in);
                let mut dwq = vec![0.0; cw];
                gemm_acc(c_in, rows, c_out, &r, true, &dy, false, &mut dwq);
                for (p, coef) in coefs {
                    for (a, b) in dw[p * cw..(p + 1) * cw].iter_mut().zip(&dwq) {
                        *a += coef * b;
                    }
                }
            }
            if let Some(dx) = dx.as_deref_mut() {
                let mut dr = vec![0.0; rows * c_in];
                gemm_acc(rows, c_out, c_in, &dy, false, wq, true, &mut dr);
                self.reduce_transpose(term, m, t, &dr, c_in, dx);
            }
        }
        Ok(())
    }
}

type BasisKey = (usize, usize, usize);

/// Shared memo of kernels and dense bases. Readers never block each other;
/// a miss takes the write lock once and rechecks before inserting.
#[derive(Default)]
pub struct BasisCache {
    kernels: RwLock<HashMap<(usize, usize), Arc<OrderPairKernel>>>,
    bases: RwLock<HashMap<BasisKey, Arc<BasisSet>>>,
}

impl BasisCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide instance.
    pub fn global() -> &'static BasisCache {
        static CACHE: OnceLock<BasisCache> = OnceLock::new();
        CACHE.get_or_init(BasisCache::new)
    }

    pub fn kernel(&self, k_in: usize, k_out: usize) -> Arc<OrderPairKernel> {
        if let Some(k) = self.kernels.read().get(&(k_in, k_out)) {
            return Arc::clone(k);
        }
        let mut map = self.kernels.write();
        Arc::clone(
            map.entry((k_in, k_out))
                .or_insert_with(|| Arc::new(OrderPairKernel::new(k_in, k_out))),
        )
    }

    pub fn basis(&self, k_in: usize, k_out: usize, m: usize) -> Result<Arc<BasisSet>> {
        if let Some(b) = self.bases.read().get(&(k_in, k_out, m)) {
            return Ok(Arc::clone(b));
        }
        let built = Arc::new(build_basis(k_in, k_out, m)?);
        let mut map = self.bases.write();
        Ok(Arc::clone(map.entry((k_in, k_out, m)).or_insert(built)))
    }

    pub fn cached_bases(&self) -> usize {
        self.bases.read().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn matches_dense_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (k_in, k_out) in [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1), (2, 2)] {
            let kernel = OrderPairKernel::new(k_in, k_out);
            for m in 1..=5 {
                let basis = build_basis(k_in, k_out, m).unwrap();
                let (c_in, c_out, t) = (3, 2, 2);
                let x = random(t * basis.cols() * c_in, &mut rng);
                let w = random(basis.len() * c_in * c_out, &mut rng);
                let mut fast = vec![0.0; t * basis.rows() * c_out];
                kernel.forward(m, t, &x, c_in, &w, c_out, &mut fast).unwrap();
                for s in 0..t {
                    let xs = &x[s * basis.cols() * c_in..(s + 1) * basis.cols() * c_in];
                    let dense = basis.apply_layer(xs, &w, c_in, c_out).unwrap();
                    let got = &fast[s * basis.rows() * c_out..(s + 1) * basis.rows() * c_out];
                    for (a, b) in got.iter().zip(&dense) {
                        assert!((a - b).abs() < 1e-12, "({k_in},{k_out},m={m}) {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn backward_is_the_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (k_in, k_out) in [(1, 1), (2, 2), (2, 0), (1, 2)] {
            let kernel = OrderPairKernel::new(k_in, k_out);
            let m = 4;
            let (c_in, c_out, t) = (2, 3, 2);
            let nx = t * pow(m, k_in) * c_in;
            let x = random(nx, &mut rng);
            let w = random(kernel.num_elements() * c_in * c_out, &mut rng);
            let dout = random(t * pow(m, k_out) * c_out, &mut rng);
            let mut dx = vec![0.0; nx];
            let mut dw = vec![0.0; w.len()];
            kernel
                .backward(m, t, &x, c_in, &w, c_out, &dout, Some(&mut dx), Some(&mut dw))
                .unwrap();
            // <dout, f(x, w)> is bilinear, so its gradients are exact
            // linear functionals and can be checked with unit probes.
            let inner = |x: &[f64], w: &[f64]| {
                let mut out = vec![0.0; dout.len()];
                kernel.forward(m, t, x, c_in, w, c_out, &mut out).unwrap();
                out.iter().zip(&dout).map(|(a, b)| a * b).sum::<f64>()
            };
            for i in 0..nx {
                let mut e = vec![0.0; nx];
                e[i] = 1.0;
                assert!((inner(&e, &w) - dx[i]).abs() < 1e-10);
            }
            for i in 0..w.len() {
                let mut e = vec![0.0; w.len()];
                e[i] = 1.0;
                assert!((inner(&x, &e) - dw[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cache_returns_shared_instances() {
        let cache = BasisCache::new();
        let a = cache.basis(1, 1, 3).unwrap();
        let b = cache.basis(1, 1, 3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.cached_bases(), 1);
        assert!(Arc::ptr_eq(&cache.kernel(2, 2), &cache.kernel(2, 2)));
    }
}
