//! Set partitions in restricted-growth-string form.

use std::fmt;

/// A set partition of `{0..k}` stored as a canonical restricted growth
/// string: element `i` belongs to block `blocks[i]`, and block ids appear in
/// first-occurrence order starting at 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    blocks: Vec<usize>,
}

impl SetPartition {
    /// Canonicalizes an arbitrary block labelling.
    pub fn from_assignment(assignment: &[usize]) -> Self {
        let mut relabel: Vec<(usize, usize)> = Vec::new();
        let blocks = assignment
            .iter()
            .map(|&label| match relabel.iter().find(|(l, _)| *l == label) {
                Some(&(_, id)) => id,
                None => {
                    let id = relabel.len();
                    relabel.push((label, id));
                    id
                }
            })
            .collect();
        Self { blocks }
    }

    /// Equality pattern of a tuple of values: positions holding the same
    /// value share a block.
    pub fn pattern_of(values: &[usize]) -> Self {
        Self::from_assignment(values)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.iter().max().map_or(0, |&b| b + 1)
    }

    pub fn block_of(&self, element: usize) -> usize {
        self.blocks[element]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.blocks
    }

    /// Members of every block, blocks in id order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &b) in self.blocks.iter().enumerate() {
            out[b].push(i);
        }
        out
    }

    /// True when every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &SetPartition) -> bool {
        debug_assert_eq!(self.len(), other.len());
        let mut image = vec![usize::MAX; self.num_blocks()];
        for (i, &b) in self.blocks.iter().enumerate() {
            let target = other.blocks[i];
            if image[b] == usize::MAX {
                image[b] = target;
            } else if image[b] != target {
                return false;
            }
        }
        true
    }

    /// Möbius function of the partition lattice, `mu(self, coarser)`.
    ///
    /// Each block of `coarser` that merges `n` blocks of `self` contributes
    /// `(-1)^(n-1) (n-1)!`.
    pub fn mobius(&self, coarser: &SetPartition) -> Option<f64> {
        if !self.refines(coarser) {
            return None;
        }
        let mut merged = vec![0usize; coarser.num_blocks()];
        let mut seen = vec![false; self.num_blocks()];
        for (i, &b) in self.blocks.iter().enumerate() {
            if !seen[b] {
                seen[b] = true;
                merged[coarser.blocks[i]] += 1;
            }
        }
        let mut mu = 1.0;
        for n in merged {
            let fact: f64 = (1..n).map(|x| x as f64).product();
            mu *= if n % 2 == 1 { fact } else { -fact };
        }
        Some(mu)
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (bi, block) in self.blocks().iter().enumerate() {
            if bi > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", e + 1)?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// All set partitions of a `k`-element set in lexicographic
/// restricted-growth-string order. This order fixes weight indices.
pub fn enumerate_partitions(k: usize) -> Vec<SetPartition> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; k];
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<SetPartition>) {
        if pos == rgs.len() {
            out.push(SetPartition {
                blocks: rgs.clone(),
            });
            return;
        }
        let limit = if pos == 0 { 0 } else { max + 1 };
        for b in 0..=limit {
            rgs[pos] = b;
            rec(pos + 1, max.max(b), rgs, out);
        }
    }
    rec(0, 0, &mut rgs, &mut out);
    out
}

/// Bell number via the Bell triangle.
pub fn bell(k: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..k {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = *next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}
