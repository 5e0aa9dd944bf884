use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, OptimizerState};
use super::config::ExperimentConfig;
use crate::autodiff::Tape;
use crate::data::{make_folds_k, FoldPlan, TUDataset};
use crate::error::{Error, Result};
use crate::layers::{Model, PreparedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the predictions made during the epoch's updates.
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub fold: usize,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub epochs: Vec<EpochMetrics>,
    /// Test accuracy of the final-epoch model.
    pub test_acc: f64,
    pub wall_clock_secs: f64,
    /// Set when the loss stopped being finite; training ends there.
    pub diverged: Option<String>,
}

impl RunRecord {
    pub fn final_train_acc(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.train_acc)
    }

    /// Metric stream without timing, for determinism comparisons.
    pub fn metrics(&self) -> (&[EpochMetrics], f64, Option<&str>) {
        (&self.epochs, self.test_acc, self.diverged.as_deref())
    }

    pub fn check(&self) -> Result<()> {
        match &self.diverged {
            Some(d) => Err(Error::Numerical(format!("{} fold {}: {d}", self.dataset, self.fold))),
            None => Ok(()),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}_fold{}.csv", self.dataset, self.seed, self.fold)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# config_hash: {}\nepoch,train_loss,train_acc,test_acc\n", self.config.hash());
        for e in &self.epochs {
            s.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.train_acc, e.test_acc));
        }
        s
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Accuracy of `model` on the prepared graphs `idx`, evaluated in batches.
pub fn evaluate(model: &Model, prepared: &[PreparedGraph], labels: &[usize], idx: &[usize], batch_size: usize) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for chunk in idx.chunks(batch_size) {
        let batch = model.batch(chunk.iter().map(|&i| &prepared[i]).collect())?;
        for (row, &i) in model.predict_batch(&batch)?.iter().zip(chunk) {
            correct += usize::from(argmax(row) == labels[i]);
        }
    }
    Ok(correct as f64 / idx.len() as f64)
}

/// Trains a fresh model on `train` and reports per-epoch metrics on `test`.
pub fn train_split(
    ds: &TUDataset,
    train: &[usize],
    test: &[usize],
    fold: usize,
    cfg: &ExperimentConfig,
) -> Result<(RunRecord, Model)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::input("empty training split"));
    }
    if let Some(&bad) = train.iter().chain(test).find(|&&i| i >= ds.len()) {
        return Err(Error::input(format!("graph index {bad} outside a dataset of {}", ds.len())));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(fold as u64);
    let model_cfg = cfg.model_config(ds, rng.gen())?;
    let train_graphs: Vec<_> = train.iter().map(|&i| ds.graphs[i].clone()).collect();
    let bucketing = Model::fit_bucketing(&model_cfg, &train_graphs)?;
    let mut model = Model::new(model_cfg, bucketing)?;
    let prepared = ds
        .graphs
        .iter()
        .map(|g| model.prepare(g))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut opt = OptimizerState::new(&sizes, cfg.lr);

    let mut record = RunRecord {
        dataset: ds.name.clone(),
        fold,
        seed: cfg.seed,
        config: cfg.clone(),
        epochs: Vec::with_capacity(cfg.epochs),
        test_acc: 0.0,
        wall_clock_secs: 0.0,
        diverged: None,
    };
    let mut order = train.to_vec();
    let mut tape = Tape::new();
    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = model.batch(chunk.iter().map(|&i| &prepared[i]).collect())?;
            let labels: Vec<usize> = chunk.iter().map(|&i| ds.labels[i]).collect();
            tape.reset();
            let params = model.register(&mut tape, true);
            let logits = model.forward(&mut tape, &batch, &params)?;
            for (row, &l) in tape.value(logits).data().chunks(ds.num_classes).zip(&labels) {
                correct += usize::from(argmax(row) == l);
            }
            let loss = tape.softmax_cross_entropy_rows(logits, &labels)?;
            let value = tape.value(loss).data()[0];
            if !value.is_finite() {
                record.diverged = Some(format!("loss {value} at epoch {epoch}, batch {b}"));
                break 'epochs;
            }
            loss_sum += value * chunk.len() as f64;
            tape.backward(loss)?;
            let grads: Vec<Vec<f64>> = params
                .all()
                .iter()
                .zip(&sizes)
                .map(|(&v, &n)| tape.grad(v).map_or_else(|| vec![0.0; n], <[f64]>::to_vec))
                .collect();
            let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            adam_step(&mut model.parameters_mut(), &grad_refs, &mut opt)?;
        }
        let test_acc = evaluate(&model, &prepared, &ds.labels, test, cfg.batch_size)?;
        record.epochs.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            test_acc,
        });
        log::debug!("{} fold {fold} epoch {epoch}: {:?}", ds.name, record.epochs.last());
    }
    record.test_acc = record.epochs.last().map_or(0.0, |e| e.test_acc);
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok((record, model))
}

/// Trains on fold `fold` of `plan`.
pub fn train_fold(ds: &TUDataset, plan: &FoldPlan, fold: usize, cfg: &ExperimentConfig) -> Result<RunRecord> {
    if fold >= plan.folds.len() || plan.len != ds.len() {
        return Err(Error::input(format!(
            "fold {fold} of a {}-fold plan over {} graphs (dataset has {})",
            plan.folds.len(),
            plan.len,
            ds.len()
        )));
    }
    Ok(train_split(ds, &plan.train(fold), plan.test(fold), fold, cfg)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub dataset: String,
    pub seed: u64,
    pub config_hash: String,
    pub fold_test_acc: Vec<f64>,
    pub fold_train_acc: Vec<f64>,
    /// Mean and population standard deviation of fold test accuracy.
    pub mean: f64,
    pub std: f64,
    pub wall_clock_secs: f64,
}

impl BenchmarkSummary {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let acc: Vec<f64> = records.iter().map(|r| r.test_acc).collect();
        let n = acc.len().max(1) as f64;
        let mean = acc.iter().sum::<f64>() / n;
        let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let first = records.first();
        BenchmarkSummary {
            dataset: first.map(|r| r.dataset.clone()).unwrap_or_default(),
            seed: first.map_or(0, |r| r.seed),
            config_hash: first.map(|r| r.config.hash()).unwrap_or_default(),
            fold_test_acc: acc,
            fold_train_acc: records.iter().map(RunRecord::final_train_acc).collect(),
            mean,
            std: var.sqrt(),
            wall_clock_secs: records.iter().map(|r| r.wall_clock_secs).sum(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# config_hash: {}\nfold,test_acc,train_acc\n", self.config_hash);
        for (i, (t, r)) in self.fold_test_acc.iter().zip(&self.fold_train_acc).enumerate() {
            s.push_str(&format!("{i},{t},{r}\n"));
        }
        s.push_str(&format!("mean,{},\nstd,{},\n", self.mean, self.std));
        s
    }
}

/// Thread pool for fold-level parallelism, capped by `LPEGN_THREADS`.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("LPEGN_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::input(format!("LPEGN_THREADS={v} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::usage(e.to_string()))
}

/// Cross-validates `cfg` on `ds`, folds in parallel.
pub fn run_benchmark(ds: &TUDataset, cfg: &ExperimentConfig) -> Result<(BenchmarkSummary, Vec<RunRecord>)> {
    cfg.validate()?;
    let plan = make_folds_k(&ds.labels, cfg.folds, cfg.seed)?;
    let records = worker_pool()?.install(|| {
        (0..plan.folds.len())
            .into_par_iter()
            .map(|f| train_fold(ds, &plan, f, cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((BenchmarkSummary::from_records(&records), records))
}

/// Writes per-fold CSVs plus summary CSV and JSON into `dir`.
pub fn write_benchmark(dir: &Path, summary: &BenchmarkSummary, records: &[RunRecord]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in records {
        let p = dir.join(r.file_name());
        fs::write(&p, r.to_csv())?;
        written.push(p);
    }
    let stem = format!("{}_{}_summary", summary.dataset, summary.seed);
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, summary.to_csv())?;
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(summary)?)?;
    written.extend([csv, json]);
    Ok(written)
}
