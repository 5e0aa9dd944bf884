//! Expressivity fixtures, scaling measurements and subgraph statistics.

mod expressivity;
mod scale;
mod stats;

pub use expressivity::{
    blank_encoding, claw_vs_paw, expressivity_model, fixture_pairs, hexagon_vs_triangles, paw_control,
    run_expressivity, ExpressivityReport, GraphPair, PairReport, INVARIANCE_TOL, SEPARATION_MARGIN,
};
pub use scale::{loglog_slope, run_scalebench, Family, ScaleReport, ScaleRow};
pub use stats::{subgraph_histograms, truncated_subgraphs};
