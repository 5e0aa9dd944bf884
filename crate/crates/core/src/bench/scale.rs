use std::str::FromStr;

use serde::Serialize;

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::graph::{khop_at, ConcreteGraph, FeatureEncoding, NodeFeatures, SubgraphMode};
use crate::layers::{Model, ModelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ring,
    Grid,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Family::Ring),
            "grid" => Ok(Family::Grid),
            _ => Err(Error::input(format!("unknown graph family `{s}` (ring or grid)"))),
        }
    }
}

impl Family {
    /// Member with `n` nodes; grids need a square `n`.
    pub fn graph(self, n: usize) -> Result<ConcreteGraph> {
        let edges: Vec<(usize, usize)> = match self {
            Family::Ring => {
                if n < 3 {
                    return Err(Error::input("a ring needs at least 3 nodes"));
                }
                (0..n).map(|i| (i, (i + 1) % n)).collect()
            }
            Family::Grid => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n || side < 2 {
                    return Err(Error::input(format!("grid size {n} is not a square of at least 4")));
                }
                let mut e = Vec::new();
                for r in 0..side {
                    for c in 0..side {
                        let i = r * side + c;
                        if c + 1 < side {
                            e.push((i, i + 1));
                        }
                        if r + 1 < side {
                            e.push((i, i + side));
                        }
                    }
                }
                e
            }
        };
        ConcreteGraph::new((0..n).collect(), &edges, vec![0; n])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleRow {
    pub n: usize,
    pub edges: usize,
    /// Order-2 activation cells per layer: n² c for the whole-graph model.
    pub global_cells: usize,
    /// Σ m_i² c over the k-hop subgraphs.
    pub local_cells: usize,
    pub global_resident: usize,
    pub local_resident: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleReport {
    pub family: Family,
    pub k: usize,
    pub channels: usize,
    pub rows: Vec<ScaleRow>,
    pub global_slope: f64,
    pub local_slope: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn resident_after_forward(model: &Model, g: &ConcreteGraph) -> Result<usize> {
    let pg = model.prepare(g)?;
    let batch = model.batch(vec![&pg])?;
    let mut tape = Tape::new();
    let params = model.register(&mut tape, false);
    model.forward(&mut tape, &batch, &params)?;
    Ok(tape.resident_floats())
}

/// Activation counts for whole-graph and k-hop models over a family.
/// `measure_up_to` bounds the sizes at which actual forward passes are run
/// to record resident floats (0 elsewhere).
pub fn run_scalebench(family: Family, sizes: &[usize], k: usize, channels: usize, measure_up_to: usize) -> Result<ScaleReport> {
    if sizes.len() < 2 {
        return Err(Error::input("need at least two sizes to fit a slope"));
    }
    let enc = FeatureEncoding {
        node: NodeFeatures::Labels { classes: 1 },
        edge_classes: 0,
    };
    let mut global_cfg = ModelConfig::global(enc.clone(), 2, &[1, 2], channels, 1)?;
    global_cfg.seed = 0;
    let mut local_cfg = ModelConfig::lpegn(enc, 2, &[1, 2], channels, 1, k)?;
    local_cfg.share_bucket_weights = true;
    let global = Model::new(global_cfg, None)?;
    let local = Model::new(local_cfg, None)?;
    let mut rows = Vec::new();
    for &n in sizes {
        let g = family.graph(n)?;
        let mut sub_cells = 0;
        for p in 0..n {
            let m = khop_at(&g, p, k, SubgraphMode::Induced)?.size();
            sub_cells += m * m;
        }
        let measure = n <= measure_up_to;
        rows.push(ScaleRow {
            n,
            edges: g.num_edges(),
            global_cells: n * n * channels,
            local_cells: sub_cells * channels,
            global_resident: if measure { resident_after_forward(&global, &g)? } else { 0 },
            local_resident: if measure { resident_after_forward(&local, &g)? } else { 0 },
        });
    }
    let slope = |f: fn(&ScaleRow) -> usize| {
        loglog_slope(&rows.iter().map(|r| (r.n as f64, f(r) as f64)).collect::<Vec<_>>())
    };
    Ok(ScaleReport {
        family,
        k,
        channels,
        global_slope: slope(|r| r.global_cells),
        local_slope: slope(|r| r.local_cells),
        rows,
    })
}
