//! Acceptance criteria, one PASS/FAIL line each. Criteria that depend on
//! datasets absent from the data directory are reported as FAIL with the
//! reason and do not fail the run; every other FAIL does.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lpegn::autodiff::gradcheck::check_gradients;
use lpegn::basis::{
    bell, build_basis, build_restricted_basis, flatten, nullspace_dimension_oracle, unflatten,
};
use lpegn::bench::{run_expressivity, run_scalebench, truncated_subgraphs, Family};
use lpegn::data::{parse_tu, TUDataset};
use lpegn::graph::{ConcreteGraph, FeatureEncoding, NodeFeatures, Permutation};
use lpegn::layers::{Model, ModelConfig};
use lpegn::train::{run_benchmark, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Not attainable here (missing data); reported, not gating.
    Unavailable(String),
}

fn data_root() -> PathBuf {
    std::env::var_os("LPEGN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data")))
}

fn load(name: &str) -> Option<TUDataset> {
    let root = data_root();
    parse_tu(&root, name).ok()
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    let e = t.elapsed();
    if e <= limit {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {:.0}s", e.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn encoding(classes: usize) -> FeatureEncoding {
    FeatureEncoding {
        node: NodeFeatures::Labels { classes },
        edge_classes: 0,
    }
}

fn randomize(model: &mut Model, rng: &mut ChaCha8Rng) {
    for p in model.parameters_mut() {
        for v in p.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
}

fn basis_counts() -> Verdict {
    let t = Instant::now();
    let mut counts = Vec::new();
    for kin in 0..=2 {
        for kout in 0..=2 {
            let b = build_basis(kin, kout, 5).unwrap();
            if b.len() as u64 != bell(kin + kout) {
                return Verdict::Fail(format!("({kin},{kout}) has {} elements", b.len()));
            }
            counts.push(b.len());
        }
    }
    if counts != [1, 1, 2, 1, 2, 5, 2, 5, 15] {
        return Verdict::Fail(format!("counts {counts:?}"));
    }
    match within(t, Duration::from_secs(1)) {
        Ok(()) => Verdict::Pass(format!("counts {counts:?}")),
        Err(e) => Verdict::Fail(e),
    }
}

fn oracle_equivalence() -> Verdict {
    let t = Instant::now();
    let mut checked = 0;
    for kin in 0..=4 {
        for kout in 0..=4 - kin {
            for m in 2..=5 {
                let span = build_basis(kin, kout, m).unwrap().span_dimension();
                let oracle = nullspace_dimension_oracle(kin, kout, m).unwrap();
                if span != oracle {
                    return Verdict::Fail(format!("({kin},{kout},m={m}): span {span}, oracle {oracle}"));
                }
                checked += 1;
            }
        }
    }
    let collapse = build_basis(2, 2, 3).unwrap().span_dimension();
    if collapse != 14 {
        return Verdict::Fail(format!("(2,2,3) span {collapse}"));
    }
    match within(t, Duration::from_secs(120)) {
        Ok(()) => Verdict::Pass(format!("{checked} cases agree; (2,2,m=3) = 14")),
        Err(e) => Verdict::Fail(e),
    }
}

fn restricted_representation() -> Verdict {
    let n = build_restricted_basis(1, 1, 5, &[4]).unwrap().len();
    if n != 5 {
        return Verdict::Fail(format!("(1,1,5) with one dropped node has {n} elements"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (cin, cout) = (2, 3);
    let mut worst: f64 = 0.0;
    for kin in 0..=2 {
        for kout in 0..=2 {
            for m in 3..=5 {
                let drop = rng.gen_range(0..m);
                let r = build_restricted_basis(kin, kout, m, &[drop]).unwrap();
                let small = build_basis(kin, kout, m - 1).unwrap();
                let kept = r.kept();
                let x: Vec<f64> = (0..m.pow(kin as u32) * cin)
                    .map(|i| {
                        let ix = unflatten(i / cin, kin, m);
                        if ix.contains(&drop) {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect();
                let to_full = |ix: &[usize]| flatten(&ix.iter().map(|&a| kept[a]).collect::<Vec<_>>(), m);
                let xs: Vec<f64> = (0..(m - 1).pow(kin as u32) * cin)
                    .map(|i| x[to_full(&unflatten(i / cin, kin, m - 1)) * cin + i % cin])
                    .collect();
                let w: Vec<f64> = (0..r.len() * cin * cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ws: Vec<f64> = r
                    .kept_elements()
                    .iter()
                    .flat_map(|&e| w[e * cin * cout..(e + 1) * cin * cout].to_vec())
                    .collect();
                let y = r.apply_layer(&x, &w, cin, cout).unwrap();
                let ys = small.apply_layer(&xs, &ws, cin, cout).unwrap();
                for i in 0..ys.len() {
                    let full = to_full(&unflatten(i / cout, kout, m - 1)) * cout + i % cout;
                    worst = worst.max((y[full] - ys[i]).abs());
                }
            }
        }
    }
    if worst < 1e-10 {
        Verdict::Pass(format!("5 elements; kept-node outputs agree to {worst:.1e}"))
    } else {
        Verdict::Fail(format!("kept-node deviation {worst:.3e}"))
    }
}

fn equivariance_suite() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let n = rng.gen_range(2..=12);
        let g = common::random_connected(n, 0.15, 3, &mut rng);
        let mut cfg = ModelConfig::lpegn(encoding(3), 2, &[0, 1, 2], 3, 1, rng.gen_range(1..=3)).unwrap();
        cfg.share_bucket_weights = true;
        cfg.seed = trial;
        let mut model = Model::new(cfg, None).unwrap();
        randomize(&mut model, &mut rng);
        let sigma = Permutation::random(n, &mut rng);
        let ids: Vec<usize> = (0..n).map(|p| 3 * sigma.apply(p) + 1).collect();
        let h = g.relabel(|id| ids[g.position(id).unwrap()]).unwrap();
        let at = |p: usize| h.position(ids[p]).unwrap();

        let (fg, fh) = (model.layer_features(&g, 0).unwrap(), model.layer_features(&h, 0).unwrap());
        for p in 0..n {
            for order in [0, 1] {
                let (a, b) = (fg.node(order, p).unwrap(), fh.node(order, at(p)).unwrap());
                worst = a.iter().zip(b).fold(worst, |w, (x, y)| w.max((x - y).abs()));
            }
            for q in 0..n {
                match (fg.cell(p, q), fh.cell(at(p), at(q))) {
                    (Some(a), Some(b)) => worst = a.iter().zip(b).fold(worst, |w, (x, y)| w.max((x - y).abs())),
                    (None, None) => {}
                    _ => return Verdict::Fail(format!("trial {trial}: stored cells differ")),
                }
            }
        }
        let (a, b) = (model.logits(&g).unwrap(), model.logits(&h).unwrap());
        worst = a.iter().zip(&b).fold(worst, |w, (x, y)| w.max((x - y).abs()));
    }
    if worst >= 1e-10 {
        return Verdict::Fail(format!("max deviation {worst:.3e}"));
    }
    match within(t, Duration::from_secs(60)) {
        Ok(()) => Verdict::Pass(format!("100 trials, max deviation {worst:.1e}")),
        Err(e) => Verdict::Fail(e),
    }
}

fn gradient_checks() -> Verdict {
    let t = Instant::now();
    let g = ConcreteGraph::new(
        vec![2, 4, 6, 8, 10],
        &[(2, 4), (4, 6), (6, 8), (8, 10), (10, 2), (4, 8)],
        vec![0, 1, 0, 1, 1],
    )
    .unwrap();
    let mut cfg = ModelConfig::lpegn(encoding(2), 2, &[1, 2], 3, 1, 1).unwrap();
    cfg.bucket_threshold = 2;
    let bucketing = Model::fit_bucketing(&cfg, std::slice::from_ref(&g)).unwrap();
    let mut model = Model::new(cfg, bucketing).unwrap();
    randomize(&mut model, &mut ChaCha8Rng::seed_from_u64(5));
    let pg = model.prepare(&g).unwrap();
    let batch = model.batch(vec![&pg]).unwrap();
    let params = model.parameter_tensors();
    let report = check_gradients(&params, 1e-5, |tape, vars| {
        let pv = model.param_vars(vars)?;
        let logits = model.forward(tape, &batch, &pv)?;
        tape.softmax_cross_entropy_rows(logits, &[1])
    })
    .unwrap();
    if report.max_rel_err >= 1e-6 {
        return Verdict::Fail(format!("max relative error {:.3e} at {:?}", report.max_rel_err, report.worst));
    }
    match within(t, Duration::from_secs(60)) {
        Ok(()) => Verdict::Pass(format!(
            "{} parameters, max relative error {:.1e}",
            report.checked, report.max_rel_err
        )),
        Err(e) => Verdict::Fail(e),
    }
}

fn expressivity() -> Verdict {
    let t = Instant::now();
    let r = run_expressivity(100).unwrap();
    let fig = r.pair("claw_vs_paw").unwrap();
    let detail = format!(
        "LPEGN separates {}/100, max-pool MPNN {}/100 (max margin {:e})",
        fig.lpegn_separations(),
        fig.mpnn_separations(),
        fig.mpnn_margins.iter().copied().fold(0.0, f64::max)
    );
    if !r.passed() {
        return Verdict::Fail(detail);
    }
    match within(t, Duration::from_secs(60)) {
        Ok(()) => Verdict::Pass(detail),
        Err(e) => Verdict::Fail(e),
    }
}

fn global_limit() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let g = common::random_connected(rng.gen_range(2..=6), 0.3, 2, &mut rng);
        let k = g.diameter().max(1) + rng.gen_range(0..2);
        let mut cfg = ModelConfig::lpegn(encoding(2), 2, &[0, 1, 2], 2, 2, k).unwrap();
        cfg.share_bucket_weights = true;
        cfg.seed = trial;
        let mut model = Model::new(cfg, None).unwrap();
        randomize(&mut model, &mut rng);
        let mut x = common::input_features(&g, &model.config.encoding);
        for layer in 0..2 {
            let w = |_: usize| model.layers[layer].buckets[0].clone();
            let out = model.config.layers[layer].output.entries();
            x = common::reference_layer(&g, &x, out, &w, &common::Scope::Global, true, true);
            worst = worst.max(common::max_deviation(&x, &model.layer_features(&g, layer).unwrap()));
        }
    }
    if worst < 1e-10 {
        Verdict::Pass(format!("20 graphs, max deviation {worst:.1e}"))
    } else {
        Verdict::Fail(format!("max deviation {worst:.3e}"))
    }
}

fn dataset_statistics() -> Verdict {
    let mut notes = Vec::new();
    match load("MUTAG") {
        Some(ds) if ds.len() == 188 && (ds.mean_nodes() - 17.9).abs() <= 0.05 => {
            notes.push(format!("MUTAG 188 graphs, mean {:.3} nodes", ds.mean_nodes()))
        }
        Some(ds) => return Verdict::Fail(format!("MUTAG {} graphs, mean {:.3}", ds.len(), ds.mean_nodes())),
        None => return Verdict::Unavailable(format!("MUTAG not found under {}", data_root().display())),
    }
    match load("PROTEINS") {
        Some(ds) if ds.len() == 1113 && (ds.mean_nodes() - 39.1).abs() <= 0.05 => {
            notes.push(format!("PROTEINS 1113 graphs, mean {:.3} nodes", ds.mean_nodes()));
            Verdict::Pass(notes.join("; "))
        }
        Some(ds) => Verdict::Fail(format!("PROTEINS {} graphs, mean {:.3}", ds.len(), ds.mean_nodes())),
        None => {
            notes.push(format!("PROTEINS not found under {}", data_root().display()));
            Verdict::Unavailable(notes.join("; "))
        }
    }
}

fn training_capacity() -> Verdict {
    let t = Instant::now();
    let mut notes = Vec::new();
    let mutag = match load("MUTAG") {
        Some(ds) => {
            let (s, records) = run_benchmark(&ds, &ExperimentConfig::default()).unwrap();
            let perfect = records.iter().filter(|r| r.epochs.iter().any(|e| e.train_acc == 1.0)).count();
            let in_band = (0.83..=0.96).contains(&s.mean);
            notes.push(format!(
                "MUTAG test {:.1} ± {:.1} % ({}), {perfect}/10 folds reach 100% train accuracy",
                100.0 * s.mean,
                100.0 * s.std,
                if in_band { "inside [83, 96]" } else { "outside [83, 96], report only" },
            ));
            true
        }
        None => {
            notes.push("MUTAG not found".into());
            false
        }
    };
    let ptc = ["PTC_MR", "PTC"].iter().find_map(|n| load(n));
    let verdict = match ptc {
        Some(ds) => {
            let (_, records) = run_benchmark(&ds, &ExperimentConfig::default()).unwrap();
            let perfect = records.iter().filter(|r| r.epochs.iter().any(|e| e.train_acc == 1.0)).count();
            notes.push(format!("PTC: {perfect}/10 folds reach 100% train accuracy"));
            if perfect >= 8 {
                None
            } else {
                Some(false)
            }
        }
        None => {
            notes.push(format!("PTC not found under {}", data_root().display()));
            Some(true)
        }
    };
    if let Err(e) = within(t, Duration::from_secs(2 * 3600)) {
        notes.push(e);
        return Verdict::Fail(notes.join("; "));
    }
    notes.push(format!("{:.0}s", t.elapsed().as_secs_f64()));
    match (verdict, mutag) {
        (None, true) => Verdict::Pass(notes.join("; ")),
        (Some(true), _) | (None, false) => Verdict::Unavailable(notes.join("; ")),
        (Some(false), _) => Verdict::Fail(notes.join("; ")),
    }
}

fn scaling_law() -> Verdict {
    let t = Instant::now();
    let r = run_scalebench(Family::Ring, &[16, 64, 256, 1024], 1, 4, 1024).unwrap();
    let detail = format!("slopes global {:.3}, local {:.3}", r.global_slope, r.local_slope);
    if (r.global_slope - 2.0).abs() > 0.1 || (r.local_slope - 1.0).abs() > 0.1 {
        return Verdict::Fail(detail);
    }
    match within(t, Duration::from_secs(60)) {
        Ok(()) => Verdict::Pass(detail),
        Err(e) => Verdict::Fail(e),
    }
}

fn subgraph_statistics() -> Verdict {
    let t = Instant::now();
    let root = data_root();
    let Some(ds) = load("MUTAG") else {
        return Verdict::Unavailable(format!("MUTAG not found under {}", root.display()));
    };
    let out = tempfile::tempdir().unwrap();
    let args = [
        "lpegn",
        "stats",
        "--dataset",
        root.to_str().unwrap(),
        "--name",
        "MUTAG",
        "--k",
        "1,2,3,4,8,15",
        "--out",
        out.path().to_str().unwrap(),
    ];
    let code = lpegn::cli::run(args, &mut Vec::new(), &mut Vec::new());
    let missing: Vec<usize> = [1, 2, 3, 4, 8, 15]
        .into_iter()
        .filter(|k| !emitted(out.path(), *k))
        .collect();
    if code != 0 || !missing.is_empty() {
        return Verdict::Fail(format!("exit {code}, missing histograms for k = {missing:?}"));
    }
    let truncated = truncated_subgraphs(&ds.graphs, 15);
    if truncated != 0 {
        return Verdict::Fail(format!("{truncated} subgraphs at k=15 smaller than their component"));
    }
    match within(t, Duration::from_secs(60)) {
        Ok(()) => Verdict::Pass("6 histograms emitted; at k=15 every subgraph is its component".into()),
        Err(e) => Verdict::Fail(e),
    }
}

fn emitted(dir: &Path, k: usize) -> bool {
    dir.join(format!("MUTAG_k{k}_sizes.csv")).exists() && dir.join(format!("MUTAG_k{k}_sizes.svg")).exists()
}

fn main() {
    // libtest flags such as --nocapture or a filter are accepted and ignored
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("basis counts", basis_counts),
        ("null-space oracle equivalence", oracle_equivalence),
        ("restricted representation", restricted_representation),
        ("equivariance suite", equivariance_suite),
        ("gradient checks", gradient_checks),
        ("expressivity", expressivity),
        ("global-limit oracle", global_limit),
        ("dataset statistics", dataset_statistics),
        ("training capacity", training_capacity),
        ("scaling law", scaling_law),
        ("subgraph statistics", subgraph_statistics),
    ];
    let mut gating_failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = check();
        let secs = t.elapsed().as_secs_f64();
        let (status, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                gating_failures += 1;
                ("FAIL", d)
            }
            Verdict::Unavailable(d) => ("FAIL", format!("{d} (data unavailable, not gating)")),
        };
        println!("criterion {:>2} {status}: {name}: {detail} [{secs:.1}s]", i + 1);
    }
    if gating_failures > 0 {
        println!("{gating_failures} gating criteria failed");
        std::process::exit(1);
    }
}
