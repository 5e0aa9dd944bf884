use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Groups subgraph sizes so that each group has enough training
/// occurrences to fit its own weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBucketing {
    pub threshold: usize,
    pub histogram: BTreeMap<usize, usize>,
    /// Sizes of each bucket, ascending; buckets ordered by their smallest size.
    pub buckets: Vec<Vec<usize>>,
    /// Set when no size met the threshold and everything shares one bucket.
    pub overflow: bool,
}

/// Sizes reaching `threshold` get their own bucket; the rest join the
/// nearest larger such size, or the nearest smaller when none is larger.
pub fn build_bucketing(histogram: &BTreeMap<usize, usize>, threshold: usize) -> Result<SizeBucketing> {
    if histogram.is_empty() {
        return Err(Error::input("cannot bucket an empty size histogram"));
    }
    if threshold == 0 {
        return Err(Error::input("bucketing threshold must be at least 1"));
    }
    let heads: Vec<usize> = histogram
        .iter()
        .filter(|(_, &c)| c >= threshold)
        .map(|(&s, _)| s)
        .collect();
    let (buckets, overflow) = if heads.is_empty() {
        (vec![histogram.keys().copied().collect()], true)
    } else {
        let mut buckets: Vec<Vec<usize>> = heads.iter().map(|&h| vec![h]).collect();
        for &size in histogram.keys() {
            if heads.binary_search(&size).is_ok() {
                continue;
            }
            let target = match heads.iter().position(|&h| h > size) {
                Some(i) => i,
                None => heads.len() - 1,
            };
            buckets[target].push(size);
        }
        for b in &mut buckets {
            b.sort_unstable();
        }
        buckets.sort();
        (buckets, false)
    };
    Ok(SizeBucketing {
        threshold,
        histogram: histogram.clone(),
        buckets,
        overflow,
    })
}

impl SizeBucketing {
    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Bucket of a size; unseen sizes go to the bucket holding the closest
    /// known size, preferring the larger on ties.
    pub fn bucket_of(&self, size: usize) -> usize {
        let mut best = (usize::MAX, 0, 0);
        for (b, sizes) in self.buckets.iter().enumerate() {
            for &s in sizes {
                let d = s.abs_diff(size);
                if d < best.0 || (d == best.0 && s > best.1) {
                    best = (d, s, b);
                }
            }
        }
        best.2
    }

    /// Training occurrences per bucket.
    pub fn counts(&self) -> Vec<usize> {
        self.buckets
            .iter()
            .map(|b| b.iter().map(|s| self.histogram.get(s).copied().unwrap_or(0)).sum())
            .collect()
    }
}
