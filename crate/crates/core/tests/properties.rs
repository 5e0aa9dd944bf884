mod common;

use std::collections::BTreeSet;

use lpegn::basis::{build_basis, nullspace_dimension_oracle, verify_equivariance};
use lpegn::data::{make_folds, parse_tu, write_tu, TUDataset};
use lpegn::graph::{khop_at, ConcreteGraph, FeatureEncoding, NodeFeatures, Permutation, SubgraphMode};
use lpegn::layers::{Model, ModelConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = ConcreteGraph> {
    (2..=max_nodes, any::<u64>(), 0.0..0.6f64).prop_map(|(n, seed, extra)| {
        let mut r = common::rng(seed);
        common::random_connected(n, extra, 3, &mut r)
    })
}

/// All-pairs hop distances by repeated relaxation, independent of BFS.
fn distances(g: &ConcreteGraph) -> Vec<Vec<usize>> {
    let n = g.num_nodes();
    let inf = usize::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    for u in 0..n {
        d[u][u] = 0;
        for v in 0..n {
            if g.has_edge(u, v) {
                d[u][v] = 1;
            }
        }
    }
    for w in 0..n {
        for u in 0..n {
            for v in 0..n {
                d[u][v] = d[u][v].min(d[u][w] + d[w][v]);
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn khop_ball_is_distance_ball(g in graph_strategy(9), k in 1usize..4) {
        let d = distances(&g);
        for c in 0..g.num_nodes() {
            let s = khop_at(&g, c, k, SubgraphMode::Induced).unwrap();
            let got: BTreeSet<usize> = s.positions.iter().copied().collect();
            let want: BTreeSet<usize> = (0..g.num_nodes()).filter(|&v| d[c][v] <= k).collect();
            prop_assert_eq!(got, want);
            prop_assert_eq!(s.positions[0], c);
            for &(a, b) in &s.edges {
                prop_assert!(g.has_edge(s.positions[a], s.positions[b]));
            }
        }
    }

    #[test]
    fn basis_is_equivariant(kin in 0usize..3, kout in 0usize..3, m in 1usize..5, seed in any::<u64>()) {
        let b = build_basis(kin, kout, m).unwrap();
        let r = verify_equivariance(&b, 3, seed);
        prop_assert!(r.passed, "{:?}", r.counterexample);
    }

    #[test]
    fn span_matches_oracle(kin in 0usize..3, kout in 0usize..3, m in 1usize..5) {
        prop_assume!(kin + kout <= 4);
        let b = build_basis(kin, kout, m).unwrap();
        prop_assert_eq!(b.span_dimension(), nullspace_dimension_oracle(kin, kout, m).unwrap());
    }

    #[test]
    fn model_ignores_node_ids(g in graph_strategy(8), seed in any::<u64>(), k in 1usize..3) {
        let enc = FeatureEncoding { node: NodeFeatures::Labels { classes: 3 }, edge_classes: 0 };
        let mut cfg = ModelConfig::lpegn(enc, 2, &[1, 2], 3, 1, k).unwrap();
        cfg.share_bucket_weights = true;
        cfg.seed = seed;
        let model = Model::new(cfg, None).unwrap();
        let n = g.num_nodes();
        let sigma = Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
        // new id of old position p: a scattered id ordered by sigma
        let ids: Vec<usize> = (0..n).map(|p| 1000 + 7 * sigma.apply(p)).collect();
        let h = g.relabel(|id| ids[g.position(id).unwrap()]).unwrap();
        let a = model.logits(&g).unwrap();
        let b = model.logits(&h).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
        }
    }

    #[test]
    fn tu_round_trip(seed in any::<u64>(), count in 1usize..6) {
        let mut r = common::rng(seed);
        let graphs: Vec<ConcreteGraph> = (0..count).map(|i| common::random_connected(2 + i % 5, 0.3, 3, &mut r)).collect();
        let ds = TUDataset {
            name: "RT".into(),
            labels: (0..count).map(|i| i % 2).collect(),
            num_classes: 2,
            node_label_classes: 3,
            edge_label_classes: 0,
            provenance: vec![],
            graphs,
        };
        let dir = tempfile::tempdir().unwrap();
        write_tu(&ds, dir.path()).unwrap();
        let back = parse_tu(dir.path(), "RT").unwrap();
        prop_assert_eq!(&back.labels, &ds.labels);
        for (a, b) in ds.graphs.iter().zip(&back.graphs) {
            prop_assert_eq!(a.num_nodes(), b.num_nodes());
            prop_assert_eq!(a.edges(), b.edges());
            // labels may be renumbered densely, but equal labels stay equal
            for u in 0..a.num_nodes() {
                for v in 0..a.num_nodes() {
                    prop_assert_eq!(a.node_label(u) == a.node_label(v), b.node_label(u) == b.node_label(v));
                }
            }
        }
    }

    #[test]
    fn folds_partition(labels in prop::collection::vec(0usize..3, 10..80), seed in any::<u64>()) {
        let plan = make_folds(&labels, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in 0..10 {
            for &i in plan.test(f) {
                seen[i] += 1;
            }
            prop_assert_eq!(plan.train(f).len() + plan.test(f).len(), labels.len());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(plan, make_folds(&labels, seed).unwrap());
    }
}
