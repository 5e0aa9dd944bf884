use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest tensor order a feature space may carry.
pub const MAX_ORDER: usize = 2;

/// Orders present in a feature space with a channel count for each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct RepSpec {
    entries: Vec<(usize, usize)>,
}

impl RepSpec {
    /// `(order, channels)` pairs; orders must ascend strictly.
    pub fn new(entries: Vec<(usize, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::input("a feature space needs at least one order"));
        }
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::input("representation orders must ascend without repeats"));
            }
        }
        for &(order, channels) in &entries {
            if order > MAX_ORDER {
                return Err(Error::input(format!("order {order} is above the supported {MAX_ORDER}")));
            }
            if channels == 0 {
                return Err(Error::input(format!("order {order} has zero channels")));
            }
        }
        Ok(RepSpec { entries })
    }

    /// Every order in `orders` with the same channel count.
    pub fn uniform(orders: &[usize], channels: usize) -> Result<Self> {
        Self::new(orders.iter().map(|&o| (o, channels)).collect())
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn orders(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn channels(&self, order: usize) -> Option<usize> {
        self.entries.iter().find(|e| e.0 == order).map(|e| e.1)
    }

    pub fn has(&self, order: usize) -> bool {
        self.channels(order).is_some()
    }
}

impl TryFrom<Vec<(usize, usize)>> for RepSpec {
    type Error = Error;

    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        RepSpec::new(v)
    }
}

impl From<RepSpec> for Vec<(usize, usize)> {
    fn from(r: RepSpec) -> Self {
        r.entries
    }
}

/// Packed layout of a batch's features: one `rows x channels` block per
/// order, ascending. Orders 0 and 1 have one row per node, order 2 one row
/// per stored cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureLayout {
    pub spec: RepSpec,
    pub nodes: usize,
    pub cells: usize,
}

impl FeatureLayout {
    pub fn new(spec: RepSpec, nodes: usize, cells: usize) -> Self {
        FeatureLayout { spec, nodes, cells }
    }

    pub fn rows(&self, order: usize) -> usize {
        if order == 2 {
            self.cells
        } else {
            self.nodes
        }
    }

    /// `(offset, channels)` of an order's block.
    pub fn block(&self, order: usize) -> Option<(usize, usize)> {
        let mut offset = 0;
        for &(o, c) in self.spec.entries() {
            if o == order {
                return Some((offset, c));
            }
            offset += self.rows(o) * c;
        }
        None
    }

    pub fn len(&self) -> usize {
        self.spec
            .entries()
            .iter()
            .map(|&(o, c)| self.rows(o) * c)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
