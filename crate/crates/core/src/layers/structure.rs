//! Per-graph preprocessing and per-batch gather/scatter plans.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::bucketing::SizeBucketing;
use super::config::{ModelConfig, Neighbourhood};
use crate::error::{Error, Result};
use crate::graph::{khop_at, ConcreteGraph, FeatureEncoding, SubGraph};

/// Row index of every stored order-2 cell of one graph.
///
/// The sparse layout keeps the diagonal (rows `0..n`) followed by the
/// directed edges in sorted order; every other cell is identically zero
/// after a local layer. The dense layout keeps all `n^2` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CellIndex {
    n: usize,
    dense: bool,
    edges: Vec<(usize, usize)>,
}

impl CellIndex {
    pub fn new(g: &ConcreteGraph, dense: bool) -> Self {
        let mut edges = Vec::new();
        if !dense {
            for (a, b) in g.edges() {
                edges.push((a, b));
                edges.push((b, a));
            }
            edges.sort_unstable();
        }
        CellIndex {
            n: g.num_nodes(),
            dense,
            edges,
        }
    }

    pub fn is_dense(&self) -> bool {
        self.dense
    }

    pub fn len(&self) -> usize {
        if self.dense {
            self.n * self.n
        } else {
            self.n + self.edges.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slot(&self, u: usize, v: usize) -> Option<usize> {
        if self.dense {
            Some(u * self.n + v)
        } else if u == v {
            Some(u)
        } else {
            self.edges.binary_search(&(u, v)).ok().map(|i| self.n + i)
        }
    }

    /// `(u, v)` of every slot, in slot order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        if self.dense {
            (0..self.n * self.n).map(|i| (i / self.n, i % self.n)).collect()
        } else {
            (0..self.n).map(|i| (i, i)).chain(self.edges.iter().copied()).collect()
        }
    }
}

/// A graph with its encoded input features and cached subgraphs.
#[derive(Clone, Debug)]
pub struct PreparedGraph {
    pub graph: ConcreteGraph,
    pub cells: CellIndex,
    /// `cells.len() x channels` input features.
    pub input: Vec<f64>,
    pub channels: usize,
    subgraphs: Vec<(usize, Vec<SubGraph>)>,
}

impl PreparedGraph {
    pub fn new(g: &ConcreteGraph, cfg: &ModelConfig) -> Result<Self> {
        if g.num_nodes() == 0 {
            return Err(Error::input("cannot run a model on an empty graph"));
        }
        let cells = CellIndex::new(g, cfg.has_global_layer());
        let input = encode_cells(&cfg.encoding, g, &cells)?;
        let mut ks: Vec<usize> = cfg
            .layers
            .iter()
            .filter_map(|l| match l.neighbourhood {
                Neighbourhood::Local { k } => Some(k),
                Neighbourhood::Global => None,
            })
            .collect();
        ks.sort_unstable();
        ks.dedup();
        let subgraphs = ks
            .into_iter()
            .map(|k| {
                let subs = (0..g.num_nodes())
                    .map(|p| khop_at(g, p, k, cfg.subgraph_mode))
                    .collect::<Result<Vec<_>>>()?;
                Ok((k, subs))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedGraph {
            graph: g.clone(),
            cells,
            input,
            channels: cfg.encoding.channels(),
            subgraphs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn subgraphs(&self, k: usize) -> Option<&[SubGraph]> {
        self.subgraphs
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, s)| s.as_slice())
    }
}

fn encode_cells(enc: &FeatureEncoding, g: &ConcreteGraph, cells: &CellIndex) -> Result<Vec<f64>> {
    let c = enc.channels();
    let mut out = vec![0.0; cells.len() * c];
    for (slot, (u, v)) in cells.cells().into_iter().enumerate() {
        let cell = &mut out[slot * c..(slot + 1) * c];
        if u == v {
            enc.encode_node(g, u, cell)?;
        } else if g.has_edge(u, v) {
            enc.encode_edge(g, u, v, cell)?;
        }
    }
    Ok(out)
}

/// One weighted copy `dst += w * src` between two row spaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Link {
    pub dst: u32,
    pub src: u32,
    pub w: f64,
}

/// Subgraphs of one size routed to one bucket, processed as a stack.
#[derive(Clone, Debug, Default)]
pub(crate) struct Group {
    pub bucket: usize,
    pub m: usize,
    pub t: usize,
    /// Gathers per input order: `dst` indexes the stacked group rows
    /// (`member * m^k + local`), `src` a batch row.
    pub gather: [Vec<Link>; 3],
    /// Scatters per output order: `src` indexes stacked group rows, `dst` a
    /// batch row (node or cell).
    pub scatter: [Vec<Link>; 3],
    /// Order-0 scatter into graph rows, used by the readout.
    pub readout: Vec<Link>,
}

/// Gather and scatter structure of one neighbourhood for one batch.
#[derive(Clone, Debug)]
pub struct NeighbourhoodPlan {
    pub(crate) groups: Vec<Group>,
}

impl NeighbourhoodPlan {
    pub fn subgraph_count(&self) -> usize {
        self.groups.iter().map(|g| g.t).sum()
    }

    /// Sum of `m^2` over all subgraphs.
    pub fn order2_cells(&self) -> usize {
        self.groups.iter().map(|g| g.t * g.m * g.m).sum()
    }
}

/// Several prepared graphs packed into shared row spaces.
pub struct Batch<'a> {
    pub graphs: Vec<&'a PreparedGraph>,
    pub node_offsets: Vec<usize>,
    pub cell_offsets: Vec<usize>,
    pub nodes: usize,
    pub cells: usize,
    plans: Vec<(Neighbourhood, Arc<NeighbourhoodPlan>)>,
}

impl<'a> Batch<'a> {
    pub fn new(
        graphs: Vec<&'a PreparedGraph>,
        cfg: &ModelConfig,
        bucketing: Option<&SizeBucketing>,
    ) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::input("empty batch"));
        }
        let mut node_offsets = Vec::with_capacity(graphs.len());
        let mut cell_offsets = Vec::with_capacity(graphs.len());
        let (mut nodes, mut cells) = (0, 0);
        for g in &graphs {
            node_offsets.push(nodes);
            cell_offsets.push(cells);
            nodes += g.num_nodes();
            cells += g.cells.len();
        }
        let mut batch = Batch {
            graphs,
            node_offsets,
            cell_offsets,
            nodes,
            cells,
            plans: Vec::new(),
        };
        let mut kinds: Vec<Neighbourhood> = Vec::new();
        for l in &cfg.layers {
            if !kinds.contains(&l.neighbourhood) {
                kinds.push(l.neighbourhood);
            }
        }
        for nb in kinds {
            let plan = match nb {
                Neighbourhood::Local { k } => batch.local_plan(k, cfg, bucketing)?,
                Neighbourhood::Global => batch.global_plan()?,
            };
            batch.plans.push((nb, Arc::new(plan)));
        }
        Ok(batch)
    }

    pub fn plan(&self, nb: Neighbourhood) -> Option<Arc<NeighbourhoodPlan>> {
        self.plans.iter().find(|(n, _)| *n == nb).map(|(_, p)| Arc::clone(p))
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Packed order-2 input features of the whole batch.
    pub fn input(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells * self.graphs[0].channels);
        for g in &self.graphs {
            out.extend_from_slice(&g.input);
        }
        out
    }

    fn local_plan(&self, k: usize, cfg: &ModelConfig, bucketing: Option<&SizeBucketing>) -> Result<NeighbourhoodPlan> {
        let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
        for (gi, pg) in self.graphs.iter().enumerate() {
            let subs = pg
                .subgraphs(k)
                .ok_or_else(|| Error::usage(format!("graph was not prepared for k = {k}")))?;
            let (no, co) = (self.node_offsets[gi], self.cell_offsets[gi]);
            for sub in subs {
                let m = sub.size();
                let bucket = match (cfg.share_bucket_weights, bucketing) {
                    (false, Some(b)) => b.bucket_of(m),
                    _ => 0,
                };
                let group = groups.entry((bucket, m)).or_insert_with(|| Group {
                    bucket,
                    m,
                    ..Group::default()
                });
                let s = group.t;
                group.t += 1;
                add_local_member(group, s, sub, pg, gi, no, co);
            }
        }
        Ok(NeighbourhoodPlan {
            groups: groups.into_values().collect(),
        })
    }

    fn global_plan(&self) -> Result<NeighbourhoodPlan> {
        let mut groups: BTreeMap<usize, Group> = BTreeMap::new();
        for (gi, pg) in self.graphs.iter().enumerate() {
            if !pg.cells.is_dense() {
                return Err(Error::usage("whole-graph layers need the dense cell layout"));
            }
            let n = pg.num_nodes();
            let group = groups.entry(n).or_insert_with(|| Group {
                bucket: 0,
                m: n,
                ..Group::default()
            });
            let s = group.t;
            group.t += 1;
            let (no, co) = (self.node_offsets[gi], self.cell_offsets[gi]);
            let inv_n = 1.0 / n as f64;
            for a in 0..n {
                let row = (s * n + a) as u32;
                group.gather[0].push(Link { dst: s as u32, src: (no + a) as u32, w: inv_n });
                group.gather[1].push(Link { dst: row, src: (no + a) as u32, w: 1.0 });
                group.scatter[0].push(Link { dst: (no + a) as u32, src: s as u32, w: 1.0 });
                group.scatter[1].push(Link { dst: (no + a) as u32, src: row, w: 1.0 });
                for b in 0..n {
                    let local = (s * n * n + a * n + b) as u32;
                    let slot = (co + a * n + b) as u32;
                    group.gather[2].push(Link { dst: local, src: slot, w: 1.0 });
                    group.scatter[2].push(Link { dst: slot, src: local, w: 1.0 });
                }
            }
            group.readout.push(Link { dst: gi as u32, src: s as u32, w: 1.0 });
        }
        Ok(NeighbourhoodPlan {
            groups: groups.into_values().collect(),
        })
    }
}

fn add_local_member(
    group: &mut Group,
    s: usize,
    sub: &SubGraph,
    pg: &PreparedGraph,
    gi: usize,
    node_offset: usize,
    cell_offset: usize,
) {
    let m = group.m;
    let center = sub.positions[0];
    let node = |p: usize| (node_offset + p) as u32;
    let cell = |u: usize, v: usize| pg.cells.slot(u, v).map(|c| (cell_offset + c) as u32);

    group.gather[0].push(Link { dst: s as u32, src: node(center), w: 1.0 });
    group.scatter[0].push(Link { dst: node(center), src: s as u32, w: 1.0 });
    group.scatter[1].push(Link { dst: node(center), src: (s * m) as u32, w: 1.0 });
    group.readout.push(Link { dst: gi as u32, src: s as u32, w: 1.0 });
    for (a, &pa) in sub.positions.iter().enumerate() {
        group.gather[1].push(Link { dst: (s * m + a) as u32, src: node(pa), w: 1.0 });
        for (b, &pb) in sub.positions.iter().enumerate() {
            // center-star subgraphs hide edges between non-center nodes
            let visible = a == b || a == 0 || b == 0 || sub.edges.binary_search(&(a.min(b), a.max(b))).is_ok();
            if let (true, Some(slot)) = (visible, cell(pa, pb)) {
                group.gather[2].push(Link { dst: (s * m * m + a * m + b) as u32, src: slot, w: 1.0 });
            }
        }
    }
    let base = s * m * m;
    if let Some(slot) = cell(center, center) {
        group.scatter[2].push(Link { dst: slot, src: base as u32, w: 1.0 });
    }
    for (b, &pb) in sub.positions.iter().enumerate().skip(1) {
        if !pg.graph.has_edge(center, pb) {
            continue;
        }
        if let Some(slot) = cell(center, pb) {
            group.scatter[2].push(Link { dst: slot, src: (base + b) as u32, w: 0.5 });
        }
        if let Some(slot) = cell(pb, center) {
            group.scatter[2].push(Link { dst: slot, src: (base + b * m) as u32, w: 0.5 });
        }
    }
}
