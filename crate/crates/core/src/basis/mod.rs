//! Bases of permutation-equivariant linear maps between tensor orders.

mod dense;
mod equivariance;
mod fast;
mod oracle;
mod partition;

pub use dense::{
    apply_weighted, build_basis, build_restricted_basis, flatten, unflatten, BasisSet, BlockLabel,
    RestrictedBasisSet, RestrictedElement,
};
pub use equivariance::{
    permute_tensor, verify_equivariance, verify_equivariance_exhaustive, verify_tensors,
    Counterexample, EquivarianceReport, EQUIVARIANCE_TOL,
};
pub use fast::{BasisCache, OrderPairKernel};
pub use oracle::{
    all_permutations, matrix_rank, nullspace_dimension_oracle, restricted_nullspace_dimension,
    ORACLE_MAX_ORDER, ORACLE_MAX_SIZE,
};
pub use partition::{bell, enumerate_partitions, SetPartition};
