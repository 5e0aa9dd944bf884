use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// Disjoint test folds covering the dataset; each fold's training set is
/// the complement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub stratified: bool,
    /// Test indices per fold, ascending.
    pub folds: Vec<Vec<usize>>,
    pub len: usize,
}

impl FoldPlan {
    pub fn test(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn train(&self, fold: usize) -> Vec<usize> {
        let mut in_test = vec![false; self.len];
        for &i in &self.folds[fold] {
            in_test[i] = true;
        }
        (0..self.len).filter(|&i| !in_test[i]).collect()
    }
}

/// Stratified `k`-fold split of items with class `labels`.
///
/// Each class is shuffled, classes are concatenated, and item `i` of the
/// result goes to fold `i mod k`, so fold sizes differ by at most one and
/// every class is spread evenly. When some class has fewer than `k`
/// members the split falls back to a plain shuffle.
pub fn make_folds_k(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::input("need at least 2 folds"));
    }
    if labels.len() < k {
        return Err(Error::input(format!(
            "{} items cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let stratified = by_class.iter().filter(|c| !c.is_empty()).all(|c| c.len() >= k);
    let order: Vec<usize> = if stratified {
        by_class
            .into_iter()
            .flat_map(|mut c| {
                c.shuffle(&mut rng);
                c
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {k} members; using an unstratified split");
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut folds = vec![Vec::new(); k];
    for (i, idx) in order.into_iter().enumerate() {
        folds[i % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        seed,
        stratified,
        folds,
        len: labels.len(),
    })
}

pub fn make_folds(labels: &[usize], seed: u64) -> Result<FoldPlan> {
    make_folds_k(labels, DEFAULT_FOLDS, seed)
}
