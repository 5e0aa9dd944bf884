//! Optimizer, cross-validated training loop and run records.

mod adam;
mod config;
mod run;

pub use adam::{adam_step, OptimizerState};
pub use config::{Architecture, ExperimentConfig};
pub use run::{
    evaluate, run_benchmark, train_fold, train_split, worker_pool, write_benchmark, BenchmarkSummary, EpochMetrics,
    RunRecord,
};
