mod common;

use std::fs;
use std::path::PathBuf;

use lpegn::cli::run;
use lpegn::data::{parse_tu, triangles_vs_paths, write_tu, TUDataset};
use lpegn::graph::ConcreteGraph;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("lpegn").chain(args.iter().copied()), &mut o, &mut e);
    (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
}

fn data_root() -> PathBuf {
    std::env::var_os("LPEGN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data")))
}

fn fixture() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    write_tu(&triangles_vs_paths(20).unwrap(), dir.path()).unwrap();
    let p = dir.path().to_str().unwrap().to_string();
    (dir, p)
}

#[test]
fn train_on_separable_fixture() {
    let (_d, data) = fixture();
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let args = [
        "train", "--dataset", &data, "--name", "TRIPATH", "--epochs", "50", "--channels", "8", "--layers", "2", "--lr",
        "0.01", "--batch-size", "8", "--out", o,
    ];
    let (code, stdout, err) = run_cli(&args);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("test accuracy 100.00 ± 0.00 %"), "{stdout}");
    let fold = fs::read_to_string(out.path().join("TRIPATH_0_fold3.csv")).unwrap();
    let mut lines = fold.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), "epoch,train_loss,train_acc,test_acc");
    assert_eq!(fold.lines().count(), 52);
    let summary = fs::read_to_string(out.path().join("TRIPATH_0_summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.ends_with(",1,1")).count(), 10);
    assert!(out.path().join("TRIPATH_0_summary.json").exists());

    // the same run again writes identical metrics
    let again = tempfile::tempdir().unwrap();
    let mut args2 = args.to_vec();
    let a = again.path().to_str().unwrap();
    *args2.last_mut().unwrap() = a;
    assert_eq!(run_cli(&args2).0, 0);
    assert_eq!(fold, fs::read_to_string(again.path().join("TRIPATH_0_fold3.csv")).unwrap());
}

#[test]
fn train_exit_codes() {
    let (code, _, err) = run_cli(&["train", "--dataset", "/no/such/dir", "--name", "MUTAG"]);
    assert_eq!(code, 2, "{err}");
    let (_d, data) = fixture();
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let (code, _, err) = run_cli(&[
        "train", "--dataset", &data, "--name", "TRIPATH", "--epochs", "5", "--channels", "4", "--layers", "2", "--lr",
        "1e300", "--out", o,
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("numerical"), "{err}");
}

#[test]
fn train_config_overlay() {
    let (_d, data) = fixture();
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"dataset": {:?}, "name": "TRIPATH", "epochs": 2, "channels": 4, "layers": 2, "folds": 4, "seed": 9}}"#,
            data
        ),
    )
    .unwrap();
    let o = out.path().to_str().unwrap();
    let (code, _, err) = run_cli(&["train", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", o]);
    assert_eq!(code, 0, "{err}");
    assert!(out.path().join("TRIPATH_5_fold3.csv").exists());
    assert!(!out.path().join("TRIPATH_5_fold4.csv").exists());
}

#[test]
fn stats_on_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let graphs: Vec<ConcreteGraph> = (0..4)
        .map(|i| {
            let ids = vec![3 * i + 1, 3 * i + 2, 3 * i + 3];
            ConcreteGraph::new(ids.clone(), &[(ids[0], ids[1]), (ids[1], ids[2]), (ids[2], ids[0])], vec![0; 3]).unwrap()
        })
        .collect();
    let ds = TUDataset {
        name: "TRI".into(),
        graphs,
        labels: vec![0, 1, 0, 1],
        num_classes: 2,
        node_label_classes: 0,
        edge_label_classes: 0,
        provenance: vec![],
    };
    write_tu(&ds, dir.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let (code, _, err) = run_cli(&[
        "stats",
        "--dataset",
        dir.path().to_str().unwrap(),
        "--name",
        "TRI",
        "--k",
        "1",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.path().join("TRI_k1_sizes.csv")).unwrap();
    assert_eq!(csv.lines().skip(2).collect::<Vec<_>>(), vec!["3,12"]);
    let svg = fs::read_to_string(out.path().join("TRI_k1_sizes.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn mutag_histogram_matches_recount() {
    let root = data_root();
    if !root.join("MUTAG").exists() {
        eprintln!("MUTAG not available; skipping");
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let (code, _, err) = run_cli(&[
        "stats",
        "--dataset",
        root.to_str().unwrap(),
        "--name",
        "MUTAG",
        "--k",
        "1",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    // recount: a 1-hop ball is the node plus its distinct neighbours
    let ds = parse_tu(&root, "MUTAG").unwrap();
    let mut want = std::collections::BTreeMap::new();
    for g in &ds.graphs {
        for u in 0..g.num_nodes() {
            let size = 1 + (0..g.num_nodes()).filter(|&v| g.has_edge(u, v)).count();
            *want.entry(size).or_insert(0usize) += 1;
        }
    }
    let csv = fs::read_to_string(out.path().join("MUTAG_k1_sizes.csv")).unwrap();
    let got: std::collections::BTreeMap<usize, usize> = csv
        .lines()
        .skip(2)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(got, want);
}

#[test]
fn expressivity_and_scalebench() {
    let (code, out, _) = run_cli(&["expressivity", "--seeds", "20"]);
    assert_eq!(code, 0);
    assert!(out.contains("claw_vs_paw,false,false,0/20,20/20"), "{out}");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, _) = run_cli(&["scalebench", "--family", "ring", "--sizes", "16,64,256", "--k", "1", "--channels", "1", "--out", d]);
    assert_eq!(code, 0);
    assert!(out.contains("256,256,65536,2304,"), "{out}");
    assert!(dir.path().join("scale_ring_k1.svg").exists());
    assert_eq!(run_cli(&["scalebench", "--family", "torus", "--out", d]).0, 2);
}
