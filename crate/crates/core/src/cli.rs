//! Command-line interface.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::basis::{build_basis, build_restricted_basis};
use crate::bench::{run_expressivity, run_scalebench, subgraph_histograms, truncated_subgraphs, Family};
use crate::data::parse_tu;
use crate::error::{Error, Result};
use crate::layers::MAX_ORDER;
use crate::report::{bar_chart, config_hash, loglog_chart};
use crate::train::{run_benchmark, write_benchmark, Architecture, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
/// A check run by the command did not hold.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "lpegn", version, about = "Locally permutation-equivariant graph networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cross-validated training on a TU dataset.
    Train(TrainArgs),
    /// Dump an equivariant basis as CSV.
    Basis(BasisArgs),
    /// Subgraph size histograms of a dataset.
    Stats(StatsArgs),
    /// Separation test on graph pairs a max-pool MPNN cannot tell apart.
    Expressivity(ExpressivityArgs),
    /// Activation counts of whole-graph versus k-hop models.
    Scalebench(ScaleArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainArgs {
    /// Directory with the TU files (or their parent); defaults to $LPEGN_DATA_DIR.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_enum)]
    architecture: Option<ArchArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    #[arg(long)]
    channels: Option<usize>,
    /// Equivariant layers including the readout layer.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    bucket_threshold: Option<usize>,
    #[arg(long)]
    degree_cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the same keys; explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ArchArg {
    Lpegn,
    Global,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BasisArgs {
    #[arg(long)]
    in_order: Option<usize>,
    #[arg(long)]
    out_order: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    /// Comma-separated local node indices removed from the symmetry group.
    #[arg(long, value_delimiter = ',')]
    restricted_drop: Option<Vec<usize>>,
    #[arg(long)]
    format: Option<String>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StatsArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    /// One or more hop counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExpressivityArgs {
    #[arg(long)]
    seeds: Option<usize>,
    /// Write per-seed margins as CSV into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScaleArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    /// Largest size at which forward passes are run to record resident floats.
    #[arg(long)]
    measure_up_to: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

/// Fills flags missing on the command line from the `--config` file.
fn overlay<A: Serialize + DeserializeOwned>(args: A, config: Option<&Path>) -> Result<A> {
    let Some(path) = config else {
        return Ok(args);
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let Value::Object(mut merged) = serde_json::from_str::<Value>(&text)? else {
        return Err(Error::Load {
            path: path.to_path_buf(),
            reason: "config must be a JSON object".into(),
        });
    };
    if let Value::Object(flags) = serde_json::to_value(&args)? {
        for (k, v) in flags {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn dataset_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| std::env::var_os("LPEGN_DATA_DIR").map(PathBuf::from))
        .ok_or_else(|| Error::input("--dataset not given and LPEGN_DATA_DIR unset"))
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::input(format!("missing --{flag}")))
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Basis(a) => cmd_basis(a, out, err),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Expressivity(a) => cmd_expressivity(a, out),
        Command::Scalebench(a) => cmd_scalebench(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let config = a.config.clone();
    let a = overlay(a, config.as_deref())?;
    let name = required(a.name, "name")?;
    let dir = dataset_dir(a.dataset)?;
    let d = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        architecture: match a.architecture {
            Some(ArchArg::Global) => Architecture::Global,
            Some(ArchArg::Lpegn) | None => Architecture::Lpegn,
        },
        k: a.k.unwrap_or(d.k),
        orders: a.orders.unwrap_or(d.orders),
        channels: a.channels.unwrap_or(d.channels),
        layers: a.layers.unwrap_or(d.layers),
        bucket_threshold: a.bucket_threshold.unwrap_or(d.bucket_threshold),
        degree_cap: a.degree_cap.unwrap_or(d.degree_cap),
        lr: a.lr.unwrap_or(d.lr),
        epochs: a.epochs.unwrap_or(d.epochs),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        seed: a.seed.unwrap_or(d.seed),
        folds: a.folds.unwrap_or(d.folds),
        ..d
    };
    let ds = parse_tu(&dir, &name)?;
    writeln!(
        out,
        "{name}: {} graphs, {} classes, mean {:.2} nodes; config {}",
        ds.len(),
        ds.num_classes,
        ds.mean_nodes(),
        cfg.hash()
    )?;
    let (summary, records) = run_benchmark(&ds, &cfg)?;
    let dir = a.out.unwrap_or_else(|| PathBuf::from("results"));
    write_benchmark(&dir, &summary, &records)?;
    for r in &records {
        writeln!(
            out,
            "fold {}: train {:.3} test {:.3} ({:.1}s)",
            r.fold,
            r.final_train_acc(),
            r.test_acc,
            r.wall_clock_secs
        )?;
    }
    writeln!(
        out,
        "test accuracy {:.2} ± {:.2} %; results in {}",
        100.0 * summary.mean,
        100.0 * summary.std,
        dir.display()
    )?;
    for r in &records {
        r.check()?;
    }
    Ok(EXIT_OK)
}

fn index_string(ix: &[usize]) -> String {
    ix.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn cmd_basis(a: BasisArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = a.config.clone();
    let a = overlay(a, config.as_deref())?;
    let (kin, kout, m) = (
        required(a.in_order, "in-order")?,
        required(a.out_order, "out-order")?,
        required(a.size, "size")?,
    );
    if kin > MAX_ORDER || kout > MAX_ORDER {
        return Err(Error::input(format!("orders must be at most {MAX_ORDER}")));
    }
    if let Some(f) = a.format.as_deref().filter(|f| *f != "csv") {
        return Err(Error::input(format!("unsupported format `{f}`")));
    }
    let drop = a.restricted_drop.clone().unwrap_or_default();
    let (count, rows) = if drop.is_empty() {
        let b = build_basis(kin, kout, m)?;
        (b.len(), b.nonzeros())
    } else {
        let b = build_restricted_basis(kin, kout, m, &drop)?;
        (b.len(), b.nonzeros())
    };
    let mut csv = format!(
        "# config_hash: {}\npartition_index,output_multi_index,input_multi_index,value\n",
        config_hash(&(kin, kout, m, &drop))
    );
    for (p, o, i, v) in rows {
        csv.push_str(&format!("{p},{},{},{v}\n", index_string(&o), index_string(&i)));
    }
    match &a.out {
        Some(path) => {
            fs::write(path, csv)?;
            writeln!(out, "elements: {count}")?;
        }
        None => {
            out.write_all(csv.as_bytes())?;
            writeln!(err, "elements: {count}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_stats(a: StatsArgs, out: &mut dyn Write) -> Result<i32> {
    let config = a.config.clone();
    let a = overlay(a, config.as_deref())?;
    let name = required(a.name, "name")?;
    let ds = parse_tu(&dataset_dir(a.dataset)?, &name)?;
    let ks = a.k.unwrap_or_else(|| vec![1]);
    let dir = a.out.unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir)?;
    for (k, hist) in subgraph_histograms(&ds.graphs, &ks)? {
        let hash = config_hash(&(&name, k, &ds.provenance));
        let mut csv = format!("# config_hash: {hash}\nsize,count\n");
        for (size, count) in &hist {
            csv.push_str(&format!("{size},{count}\n"));
        }
        let stem = format!("{name}_k{k}_sizes");
        fs::write(dir.join(format!("{stem}.csv")), csv)?;
        let bars: Vec<(String, f64)> = hist.iter().map(|(s, c)| (s.to_string(), *c as f64)).collect();
        fs::write(
            dir.join(format!("{stem}.svg")),
            bar_chart(&format!("{name}, k = {k}"), "subgraph size", "occurrences", &bars),
        )?;
        writeln!(
            out,
            "k={k}: {} subgraphs, {} distinct sizes, {} smaller than their component",
            hist.values().sum::<usize>(),
            hist.len(),
            truncated_subgraphs(&ds.graphs, k)
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_expressivity(a: ExpressivityArgs, out: &mut dyn Write) -> Result<i32> {
    let config = a.config.clone();
    let a = overlay(a, config.as_deref())?;
    let seeds = a.seeds.unwrap_or(100);
    let report = run_expressivity(seeds)?;
    writeln!(out, "pair,isomorphic,wl_indistinguishable,mpnn_separated,lpegn_separated,mpnn_max_margin,lpegn_min_margin")?;
    for p in &report.pairs {
        writeln!(
            out,
            "{},{},{},{}/{seeds},{}/{seeds},{:e},{:e}",
            p.name,
            p.isomorphic,
            p.wl_indistinguishable,
            p.mpnn_separations(),
            p.lpegn_separations(),
            p.mpnn_margins.iter().copied().fold(0.0, f64::max),
            p.lpegn_margins.iter().copied().fold(f64::INFINITY, f64::min),
        )?;
    }
    if let Some(dir) = a.out {
        fs::create_dir_all(&dir)?;
        let mut csv = format!("# config_hash: {}\npair,seed,mpnn_margin,lpegn_margin\n", config_hash(&seeds));
        for p in &report.pairs {
            for (s, (m, l)) in p.mpnn_margins.iter().zip(&p.lpegn_margins).enumerate() {
                csv.push_str(&format!("{},{s},{m:e},{l:e}\n", p.name));
            }
        }
        fs::write(dir.join("expressivity.csv"), csv)?;
    }
    let passed = report.passed();
    writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_scalebench(a: ScaleArgs, out: &mut dyn Write) -> Result<i32> {
    let config = a.config.clone();
    let a = overlay(a, config.as_deref())?;
    let family: Family = a.family.as_deref().unwrap_or("ring").parse()?;
    let sizes = a.sizes.unwrap_or_else(|| vec![16, 64, 256, 1024]);
    let k = a.k.unwrap_or(1);
    let channels = a.channels.unwrap_or(4);
    let measure = a.measure_up_to.unwrap_or(1024);
    let report = run_scalebench(family, &sizes, k, channels, measure)?;
    let hash = config_hash(&(family, &sizes, k, channels, measure));
    let mut csv = format!("# config_hash: {hash}\nn,edges,global_cells,local_cells,global_resident,local_resident\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.edges, r.global_cells, r.local_cells, r.global_resident, r.local_resident
        ));
    }
    let dir = a.out.unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir)?;
    let fam = serde_json::to_value(family)?;
    let stem = format!("scale_{}_k{k}", fam.as_str().unwrap_or("family"));
    fs::write(dir.join(format!("{stem}.csv")), &csv)?;
    let mut series = BTreeMap::new();
    series.insert("global", report.rows.iter().map(|r| (r.n as f64, r.global_cells as f64)).collect());
    series.insert("local", report.rows.iter().map(|r| (r.n as f64, r.local_cells as f64)).collect());
    let series: Vec<(String, Vec<(f64, f64)>)> = series.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    fs::write(
        dir.join(format!("{stem}.svg")),
        loglog_chart("order-2 activation cells", "nodes", "cells", &series),
    )?;
    out.write_all(csv.as_bytes())?;
    writeln!(
        out,
        "slope global {:.4}, local {:.4}",
        report.global_slope, report.local_slope
    )?;
    Ok(EXIT_OK)
}
