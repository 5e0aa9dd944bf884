mod common;

use common::*;
use lpegn::graph::{ConcreteGraph, FeatureEncoding, NodeFeatures};
use lpegn::layers::{Model, ModelConfig};

const TOL: f64 = 1e-10;

fn encoding() -> FeatureEncoding {
    FeatureEncoding {
        node: NodeFeatures::Labels { classes: 2 },
        edge_classes: 0,
    }
}

fn randomize(model: &mut Model, seed: u64) {
    let mut r = rng(seed);
    for p in model.parameters_mut() {
        for v in p.iter_mut() {
            *v = rand::Rng::gen_range(&mut r, -1.0..1.0);
        }
    }
}

fn check_stack(model: &Model, g: &ConcreteGraph, scope: &Scope, sparse: bool) -> f64 {
    let cfg = &model.config;
    let mut x = input_features(g, &cfg.encoding);
    let mut worst: f64 = 0.0;
    for (i, layer) in cfg.layers.iter().enumerate() {
        let hidden = i + 1 < cfg.layers.len();
        let weights = |m: usize| {
            let b = model.bucketing.as_ref().map_or(0, |b| b.bucket_of(m));
            let b = if cfg.share_bucket_weights { 0 } else { b };
            model.layers[i].buckets[b].clone()
        };
        x = reference_layer(g, &x, layer.output.entries(), &weights, scope, sparse, hidden);
        if hidden {
            worst = worst.max(max_deviation(&x, &model.layer_features(g, i).unwrap()));
        } else {
            let e = model.embedding(g).unwrap();
            worst = worst.max(e.iter().zip(&x.x[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    worst
}

#[test]
fn path_of_four_matches_reference() {
    let g = ConcreteGraph::new(vec![3, 8, 1, 6], &[(3, 8), (8, 1), (1, 6)], vec![0, 1, 1, 0]).unwrap();
    let mut cfg = ModelConfig::lpegn(encoding(), 2, &[0, 1, 2], 3, 2, 1).unwrap();
    cfg.share_bucket_weights = true;
    let mut model = Model::new(cfg, None).unwrap();
    randomize(&mut model, 1);
    let dev = check_stack(&model, &g, &Scope::Local(1), true);
    assert!(dev < TOL, "deviation {dev}");
}

#[test]
fn bucketed_weights_match_reference() {
    let mut r = rng(2);
    let graphs: Vec<ConcreteGraph> = (0..12).map(|i| random_connected(4 + i % 4, 0.2, 2, &mut r)).collect();
    let mut cfg = ModelConfig::lpegn(encoding(), 2, &[1, 2], 2, 1, 1).unwrap();
    cfg.bucket_threshold = 8;
    let bucketing = Model::fit_bucketing(&cfg, &graphs).unwrap();
    assert!(bucketing.as_ref().unwrap().len() > 1);
    let mut model = Model::new(cfg, bucketing).unwrap();
    randomize(&mut model, 3);
    for g in &graphs {
        let dev = check_stack(&model, g, &Scope::Local(1), true);
        assert!(dev < TOL, "deviation {dev}");
    }
}

#[test]
fn two_hop_and_random_graphs_match_reference() {
    let mut r = rng(4);
    for seed in 0..10 {
        let g = random_connected(3 + seed % 6, 0.3, 2, &mut r);
        let k = 1 + (seed as usize) % 3;
        let mut cfg = ModelConfig::lpegn(encoding(), 3, &[0, 1, 2], 2, 2, k).unwrap();
        cfg.share_bucket_weights = true;
        let mut model = Model::new(cfg, None).unwrap();
        randomize(&mut model, 10 + seed as u64);
        let dev = check_stack(&model, &g, &Scope::Local(k), true);
        assert!(dev < TOL, "graph {seed}: deviation {dev}");
    }
}

#[test]
fn whole_graph_model_matches_reference() {
    let mut r = rng(5);
    for seed in 0..5 {
        let g = random_connected(2 + seed, 0.4, 2, &mut r);
        let mut model = Model::new(ModelConfig::global(encoding(), 2, &[0, 1, 2], 2, 2).unwrap(), None).unwrap();
        randomize(&mut model, 20 + seed as u64);
        let dev = check_stack(&model, &g, &Scope::Global, false);
        assert!(dev < TOL, "graph {seed}: deviation {dev}");
    }
}

#[test]
fn wide_ball_equals_whole_graph_layer() {
    let mut r = rng(6);
    for trial in 0..20 {
        let n = 2 + trial % 5;
        let g = random_connected(n, 0.3, 2, &mut r);
        let k = g.diameter().max(1);
        let mut cfg = ModelConfig::lpegn(encoding(), 2, &[0, 1, 2], 2, 2, k).unwrap();
        cfg.share_bucket_weights = true;
        let mut model = Model::new(cfg, None).unwrap();
        randomize(&mut model, 40 + trial as u64);
        // whole-graph reference with the same weights, keeping only the
        // cells the local model stores
        let x = input_features(&g, &model.config.encoding);
        let w0 = |_: usize| model.layers[0].buckets[0].clone();
        let y = reference_layer(&g, &x, model.config.layers[0].output.entries(), &w0, &Scope::Global, true, true);
        let dev = max_deviation(&y, &model.layer_features(&g, 0).unwrap());
        assert!(dev < TOL, "trial {trial}: deviation {dev}");
    }
}
