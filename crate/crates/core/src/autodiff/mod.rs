//! Minimal dense tensors with tape-based reverse-mode differentiation.

mod einsum;
pub mod gemm;
pub mod gradcheck;
mod tape;
mod tensor;

pub use einsum::ContractionSpec;
pub use tape::{Backward, Elementwise, ReduceKind, Tape, Var};
pub use tensor::Tensor;
