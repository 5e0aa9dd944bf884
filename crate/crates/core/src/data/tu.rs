//! TU benchmark text format.
//!
//! `NAME_A.txt` holds 1-indexed `a, b` node pairs, `NAME_graph_indicator.txt`
//! the graph id of node `i` on line `i`, `NAME_graph_labels.txt` one label
//! per graph. Node and edge label files are optional.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{ConcreteGraph, FeatureEncoding, NodeFeatures};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug)]
pub struct TUDataset {
    pub name: String,
    pub graphs: Vec<ConcreteGraph>,
    /// Graph classes remapped to `0..num_classes`.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Distinct node labels, 0 when the dataset has none.
    pub node_label_classes: usize,
    /// Distinct edge labels, 0 when the dataset has none.
    pub edge_label_classes: usize,
    pub provenance: Vec<FileDigest>,
}

impl TUDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn mean_nodes(&self) -> f64 {
        let total: usize = self.graphs.iter().map(ConcreteGraph::num_nodes).sum();
        total as f64 / self.graphs.len().max(1) as f64
    }

    pub fn mean_edges(&self) -> f64 {
        let total: usize = self.graphs.iter().map(ConcreteGraph::num_edges).sum();
        total as f64 / self.graphs.len().max(1) as f64
    }

    pub fn max_degree(&self) -> usize {
        self.graphs
            .iter()
            .flat_map(|g| (0..g.num_nodes()).map(move |p| g.degree(p)))
            .max()
            .unwrap_or(0)
    }

    /// Input channels: node label one-hot, or constant plus capped degree
    /// one-hot for unlabelled graphs; edge labels when present.
    pub fn encoding(&self, degree_cap: usize) -> FeatureEncoding {
        let node = if self.node_label_classes > 0 {
            NodeFeatures::Labels {
                classes: self.node_label_classes,
            }
        } else {
            NodeFeatures::Degree { cap: degree_cap }
        };
        FeatureEncoding {
            node,
            edge_classes: self.edge_label_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

struct Lines {
    path: PathBuf,
    lines: Vec<(usize, String)>,
    digest: FileDigest,
}

fn read_lines(path: &Path) -> Result<Lines> {
    let bytes = fs::read(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    Ok(Lines {
        path: path.to_path_buf(),
        lines,
        digest: FileDigest {
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        },
    })
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_ints(file: &Lines, line: usize, text: &str, expect: usize) -> Result<Vec<i64>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != expect {
        return Err(format_err(
            &file.path,
            line,
            format!("expected {expect} comma-separated values, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<i64>()
                .map_err(|_| format_err(&file.path, line, format!("`{p}` is not an integer")))
        })
        .collect()
}

fn single_column(file: &Lines) -> Result<Vec<(usize, i64)>> {
    file.lines
        .iter()
        .map(|(n, l)| {
            // some label files carry extra columns; the first is the label
            let first = l.split(',').next().unwrap_or("").trim();
            first
                .parse::<i64>()
                .map(|v| (*n, v))
                .map_err(|_| format_err(&file.path, *n, format!("`{first}` is not an integer")))
        })
        .collect()
}

fn remap(values: impl Iterator<Item = i64>) -> BTreeMap<i64, usize> {
    let set: BTreeSet<i64> = values.collect();
    set.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
}

/// Directory holding `name`'s files: `dir` itself or its `name` child.
pub fn locate_tu(dir: &Path, name: &str) -> PathBuf {
    let nested = dir.join(name);
    if !dir.join(format!("{name}_A.txt")).exists() && nested.join(format!("{name}_A.txt")).exists() {
        nested
    } else {
        dir.to_path_buf()
    }
}

/// Reads dataset `name` from `dir` (or `dir/name`).
pub fn parse_tu(dir: &Path, name: &str) -> Result<TUDataset> {
    let dir = &locate_tu(dir, name);
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));
    let a = read_lines(&file("A"))?;
    let indicator = read_lines(&file("graph_indicator"))?;
    let graph_labels = read_lines(&file("graph_labels"))?;
    let node_labels = file("node_labels")
        .exists()
        .then(|| read_lines(&file("node_labels")))
        .transpose()?;
    let edge_labels = file("edge_labels")
        .exists()
        .then(|| read_lines(&file("edge_labels")))
        .transpose()?;

    let node_graph = single_column(&indicator)?;
    let n = node_graph.len();
    let graph_ids = remap(node_graph.iter().map(|&(_, g)| g));
    let glabels = single_column(&graph_labels)?;
    if glabels.len() != graph_ids.len() {
        return Err(Error::Load {
            path: graph_labels.path.clone(),
            reason: format!("{} labels for {} graphs", glabels.len(), graph_ids.len()),
        });
    }
    let class_map = remap(glabels.iter().map(|&(_, l)| l));

    let nlabels: Vec<usize> = match &node_labels {
        Some(f) => {
            let v = single_column(f)?;
            if v.len() != n {
                return Err(Error::Load {
                    path: f.path.clone(),
                    reason: format!("{} node labels for {n} nodes", v.len()),
                });
            }
            let map = remap(v.iter().map(|&(_, l)| l));
            v.iter().map(|(_, l)| map[l]).collect()
        }
        None => vec![0; n],
    };
    let node_label_classes = match &node_labels {
        Some(_) => nlabels.iter().max().map_or(0, |m| m + 1),
        None => 0,
    };

    let elabels_raw: Option<Vec<i64>> = match &edge_labels {
        Some(f) => {
            let v = single_column(f)?;
            if v.len() != a.lines.len() {
                return Err(Error::Load {
                    path: f.path.clone(),
                    reason: format!("{} edge labels for {} edges", v.len(), a.lines.len()),
                });
            }
            Some(v.into_iter().map(|(_, l)| l).collect())
        }
        None => None,
    };
    let edge_map = elabels_raw.as_ref().map(|v| remap(v.iter().copied()));

    let g_of_node: Vec<usize> = node_graph.iter().map(|(_, g)| graph_ids[g]).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); graph_ids.len()];
    for (i, &g) in g_of_node.iter().enumerate() {
        members[g].push(i + 1);
    }
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_ids.len()];
    let mut elabels: Vec<HashMap<(usize, usize), usize>> = vec![HashMap::new(); graph_ids.len()];
    let mut self_loops = 0;
    for (idx, (line, text)) in a.lines.iter().enumerate() {
        let v = parse_ints(&a, *line, text, 2)?;
        let (u, w) = (v[0], v[1]);
        for x in [u, w] {
            if x < 1 || x as usize > n {
                return Err(format_err(&a.path, *line, format!("edge references unknown node {x}")));
            }
        }
        let (u, w) = (u as usize, w as usize);
        let g = g_of_node[u - 1];
        if g_of_node[w - 1] != g {
            return Err(format_err(&a.path, *line, format!("edge ({u}, {w}) joins two graphs")));
        }
        if u == w {
            self_loops += 1;
            continue;
        }
        edges[g].push((u, w));
        if let (Some(raw), Some(map)) = (&elabels_raw, &edge_map) {
            elabels[g].insert((u.min(w), u.max(w)), map[&raw[idx]]);
        }
    }
    if self_loops > 0 {
        log::warn!("{name}: dropped {self_loops} self-loop entries");
    }

    let mut graphs = Vec::with_capacity(members.len());
    for (g, ids) in members.into_iter().enumerate() {
        let labels = ids.iter().map(|&i| nlabels[i - 1]).collect();
        let mut cg = ConcreteGraph::new(ids, &edges[g], labels)?;
        if edge_map.is_some() {
            let list: Vec<((usize, usize), usize)> = elabels[g].iter().map(|(&k, &v)| (k, v)).collect();
            cg = cg.with_edge_labels(&list)?;
        }
        graphs.push(cg);
    }
    let mut provenance = vec![a.digest, indicator.digest, graph_labels.digest];
    provenance.extend(node_labels.map(|f| f.digest));
    provenance.extend(edge_labels.map(|f| f.digest));
    Ok(TUDataset {
        name: name.to_string(),
        graphs,
        labels: glabels.iter().map(|(_, l)| class_map[l]).collect(),
        num_classes: class_map.len(),
        node_label_classes,
        edge_label_classes: edge_map.map_or(0, |m| m.len()),
        provenance,
    })
}

/// Writes `ds` in TU format. Node ids are renumbered consecutively from 1
/// in graph order; labels are written in their remapped form.
pub fn write_tu(ds: &TUDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut a = String::new();
    let mut indicator = String::new();
    let mut nlabels = String::new();
    let mut elabels = String::new();
    let mut next = 1;
    for (gi, g) in ds.graphs.iter().enumerate() {
        let base = next;
        for p in 0..g.num_nodes() {
            indicator.push_str(&format!("{}\n", gi + 1));
            nlabels.push_str(&format!("{}\n", g.node_label(p)));
        }
        next += g.num_nodes();
        for (u, v) in g.edges() {
            for (x, y) in [(u, v), (v, u)] {
                a.push_str(&format!("{}, {}\n", base + x, base + y));
                if let Some(l) = g.edge_label(x, y) {
                    elabels.push_str(&format!("{l}\n"));
                }
            }
        }
    }
    let labels: String = ds.labels.iter().map(|l| format!("{l}\n")).collect();
    let path = |s: &str| dir.join(format!("{}_{s}.txt", ds.name));
    fs::write(path("A"), a)?;
    fs::write(path("graph_indicator"), indicator)?;
    fs::write(path("graph_labels"), labels)?;
    if ds.node_label_classes > 0 {
        fs::write(path("node_labels"), nlabels)?;
    }
    if ds.edge_label_classes > 0 {
        fs::write(path("edge_labels"), elabels)?;
    }
    Ok(())
}
