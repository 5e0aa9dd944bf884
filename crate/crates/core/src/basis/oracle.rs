//! Exhaustive null-space oracle for equivariant map spaces.
//!
//! A map `m^k_in -> m^k_out` commutes with every permutation iff it is fixed
//! by the group average `P = 1/|G| sum_g rho(g)` acting on the combined index
//! tuples. `P` is a projector, so the commutant dimension is `rank(P)`, which
//! also equals `trace(P)`; both are computed and must agree.

use super::dense::pow;
use crate::error::{Error, Result};

/// Largest node count the oracle will enumerate `m!` permutations for.
pub const ORACLE_MAX_SIZE: usize = 6;
/// Largest combined order `k_in + k_out`.
pub const ORACLE_MAX_ORDER: usize = 4;

const RANK_TOL: f64 = 1e-9;

/// All permutations of `0..m` (Heap's algorithm).
pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut out = vec![perm.clone()];
    let mut c = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Rank of the matrix whose rows are `rows` (all of equal length), by
/// Gaussian elimination with partial pivoting.
pub fn matrix_rank(rows: &[Vec<f64>]) -> usize {
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = RANK_TOL * scale;
    let mut rank = 0;
    for col in 0..width {
        if rank == a.len() {
            break;
        }
        let (pivot, best) = (rank..a.len())
            .map(|r| (r, a[r][col].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        a.swap(rank, pivot);
        let pivot_row = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn check_limits(k_in: usize, k_out: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::input("oracle size must be at least 1"));
    }
    if m > ORACLE_MAX_SIZE || k_in + k_out > ORACLE_MAX_ORDER {
        return Err(Error::usage(format!(
            "exhaustive oracle limited to m <= {ORACLE_MAX_SIZE} and k_in + k_out <= {ORACLE_MAX_ORDER}, got m = {m}, k_in + k_out = {}",
            k_in + k_out
        )));
    }
    Ok(())
}

fn fixed_space_dimension(k: usize, m: usize, group: &[Vec<usize>]) -> Result<usize> {
    let d = pow(m, k);
    let mut projector = vec![vec![0.0; d]; d];
    let w = 1.0 / group.len() as f64;
    let mut digits = vec![0usize; k];
    for g in group {
        for t in 0..d {
            let mut rest = t;
            for slot in digits.iter_mut().rev() {
                *slot = rest % m;
                rest /= m;
            }
            let image = digits.iter().fold(0, |acc, &x| acc * m + g[x]);
            projector[image][t] += w;
        }
    }
    let rank = matrix_rank(&projector);
    let trace: f64 = (0..d).map(|i| projector[i][i]).sum();
    if (trace - rank as f64).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "projector rank {rank} disagrees with trace {trace}"
        )));
    }
    Ok(rank)
}

/// Dimension of the space of linear maps `rho_k_in -> rho_k_out` on `m`
/// nodes that commute with all of `S_m`.
pub fn nullspace_dimension_oracle(k_in: usize, k_out: usize, m: usize) -> Result<usize> {
    check_limits(k_in, k_out, m)?;
    fixed_space_dimension(k_in + k_out, m, &all_permutations(m))
}

/// Same as [`nullspace_dimension_oracle`] for the subgroup of permutations
/// fixing every node in `dropped`.
pub fn restricted_nullspace_dimension(
    k_in: usize,
    k_out: usize,
    m: usize,
    dropped: &[usize],
) -> Result<usize> {
    check_limits(k_in, k_out, m)?;
    if let Some(&bad) = dropped.iter().find(|&&d| d >= m) {
        return Err(Error::input(format!("dropped node {bad} is outside 0..{m}")));
    }
    let group: Vec<Vec<usize>> = all_permutations(m)
        .into_iter()
        .filter(|g| dropped.iter().all(|&d| g[d] == d))
        .collect();
    fixed_space_dimension(k_in + k_out, m, &group)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_counts() {
        assert_eq!(all_permutations(0).len(), 1);
        assert_eq!(all_permutations(1).len(), 1);
        let p4 = all_permutations(4);
        assert_eq!(p4.len(), 24);
        let mut sorted = p4.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(matrix_rank(&[vec![1.0, 2.0], vec![2.0, 4.0]]), 1);
        assert_eq!(matrix_rank(&[vec![1.0, 0.0], vec![0.0, 3.0]]), 2);
        assert_eq!(matrix_rank(&[vec![0.0, 0.0]]), 0);
        assert_eq!(matrix_rank(&[]), 0);
    }

    #[test]
    fn known_dimensions() {
        assert_eq!(nullspace_dimension_oracle(1, 1, 2).unwrap(), 2);
        assert_eq!(nullspace_dimension_oracle(2, 2, 3).unwrap(), 14);
        assert_eq!(nullspace_dimension_oracle(0, 0, 4).unwrap(), 1);
        assert_eq!(restricted_nullspace_dimension(1, 1, 3, &[2]).unwrap(), 5);
    }

    #[test]
    fn limits_are_enforced() {
        assert!(matches!(
            nullspace_dimension_oracle(1, 1, 7),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            nullspace_dimension_oracle(3, 2, 3),
            Err(Error::Usage(_))
        ));
    }
}
