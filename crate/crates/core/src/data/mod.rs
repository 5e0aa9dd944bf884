//! Dataset loading and cross-validation splits.

mod folds;
mod synthetic;
mod tu;

pub use synthetic::triangles_vs_paths;
pub use folds::{make_folds, make_folds_k, FoldPlan, DEFAULT_FOLDS};
pub use tu::{locate_tu, parse_tu, write_tu, FileDigest, TUDataset};
