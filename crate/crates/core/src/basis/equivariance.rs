//! Numerical equivariance checks for families of dense map tensors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{pow, BasisSet};
use super::oracle::all_permutations;

pub const EQUIVARIANCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub element: usize,
    pub permutation: Vec<usize>,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    pub passed: bool,
    pub checks: usize,
    pub max_abs_err: f64,
    pub counterexample: Option<Counterexample>,
}

/// `(perm . x)[perm(i1), .., perm(ik)] = x[i1, .., ik]` for an order-`k`
/// tensor on `m` nodes with a single channel.
pub fn permute_tensor(x: &[f64], k: usize, m: usize, perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut digits = vec![0usize; k];
    for (flat, &v) in x.iter().enumerate() {
        let mut rest = flat;
        for d in digits.iter_mut().rev() {
            *d = rest % m;
            rest /= m;
        }
        let image = digits.iter().fold(0, |acc, &d| acc * m + perm[d]);
        out[image] = v;
    }
    out
}

fn apply(tensor: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|o| tensor[o * cols..(o + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn check(
    tensors: &[Vec<f64>],
    k_in: usize,
    k_out: usize,
    m: usize,
    cases: impl Iterator<Item = (Vec<usize>, Vec<f64>)>,
) -> EquivarianceReport {
    let (rows, cols) = (pow(m, k_out), pow(m, k_in));
    let mut report = EquivarianceReport {
        passed: true,
        checks: 0,
        max_abs_err: 0.0,
        counterexample: None,
    };
    for (perm, x) in cases {
        let px = permute_tensor(&x, k_in, m, &perm);
        for (element, t) in tensors.iter().enumerate() {
            let lhs = apply(t, rows, cols, &px);
            let rhs = permute_tensor(&apply(t, rows, cols, &x), k_out, m, &perm);
            let err = lhs
                .iter()
                .zip(&rhs)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            report.checks += 1;
            report.max_abs_err = report.max_abs_err.max(err);
            if err > EQUIVARIANCE_TOL && report.counterexample.is_none() {
                report.passed = false;
                report.counterexample = Some(Counterexample {
                    element,
                    permutation: perm.clone(),
                    error: err,
                });
            }
        }
    }
    report
}

/// Randomized check over `trials` (permutation, input) draws.
pub fn verify_tensors(
    tensors: &[Vec<f64>],
    k_in: usize,
    k_out: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> EquivarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = pow(m, k_in);
    let cases: Vec<(Vec<usize>, Vec<f64>)> = (0..trials)
        .map(|_| {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            let x = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (perm, x)
        })
        .collect();
    check(tensors, k_in, k_out, m, cases.into_iter())
}

pub fn verify_equivariance(basis: &BasisSet, trials: usize, seed: u64) -> EquivarianceReport {
    verify_tensors(&basis.tensors, basis.k_in, basis.k_out, basis.size, trials, seed)
}

/// Checks every permutation of `S_m` against one random input each.
pub fn verify_equivariance_exhaustive(basis: &BasisSet, seed: u64) -> EquivarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, cols) = (basis.size, basis.cols());
    let cases = all_permutations(m).into_iter().map(move |perm| {
        let x: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (perm, x)
    });
    check(&basis.tensors, basis.k_in, basis.k_out, m, cases)
}
