mod common;

use commaudit::coreset::{select_coreset, CoresetConfig};
use commaudit::datagen::{generate_sbm, SbmConfig};
use commaudit::gnn::{
    fairness_loss, forward, gradients, softmax_rows, total_loss, train, ModelDims, ModelParams,
    Objective, TrainConfig,
};
use commaudit::graph::split_nodes;
use commaudit::homophily::homophily_profile;
use commaudit::{normalized_adjacency, Graph, Matrix};
use proptest::prelude::*;

fn dims(in_dim: usize) -> ModelDims {
    ModelDims {
        in_dim,
        hidden1: 7,
        hidden2: 5,
        num_classes: 2,
    }
}

fn arb_matrix(
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    scale: f64,
) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-scale..scale, r * c).prop_map(move |v| Matrix::from_vec(r, c, v))
    })
}

/// Disjoint union of `g` with a copy of itself.
fn doubled(g: &Graph) -> Graph {
    let n = g.num_nodes();
    let edges: Vec<_> = g
        .edges()
        .chain(g.edges().map(|(u, v)| (u + n, v + n)))
        .collect();
    let mut feats = g.features().as_slice().to_vec();
    feats.extend_from_slice(g.features().as_slice());
    let twice = |xs: &[usize]| [xs, xs].concat();
    Graph::from_edges(
        2 * n,
        &edges,
        Matrix::from_vec(2 * n, g.feature_dim(), feats),
        twice(g.labels()),
        [g.sensitive(), g.sensitive()].concat(),
    )
    .unwrap()
}

/// Relabels node `u` as `perm[u]`.
fn permuted(g: &Graph, perm: &[usize]) -> Graph {
    let n = g.num_nodes();
    let edges: Vec<_> = g.edges().map(|(u, v)| (perm[u], perm[v])).collect();
    let mut feats = Matrix::zeros(n, g.feature_dim());
    let mut labels = vec![0; n];
    let mut sens = vec![0; n];
    for u in 0..n {
        feats.row_mut(perm[u]).copy_from_slice(g.features().row(u));
        labels[perm[u]] = g.labels()[u];
        sens[perm[u]] = g.sensitive()[u];
    }
    Graph::from_edges(n, &edges, feats, labels, sens).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_sum_to_one(logits in arb_matrix(1..20, 1..6, 800.0)) {
        let p = softmax_rows(&logits);
        for row in p.iter_rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn total_loss_grows_with_fairness_term(task in 0.0f64..5.0, a in 0.0f64..2.0, b in 0.0f64..2.0, lambda in 1e-6f64..10.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(total_loss(task, lo, lambda) <= total_loss(task, hi, lambda));
    }

    #[test]
    fn fairness_loss_matches_all_pairs(
        h in arb_matrix(20..21, 1..8, 3.0),
        labels in prop::collection::vec(0usize..2, 20),
        scale in 1e-3f64..1e3,
    ) {
        let got = fairness_loss(&h, &labels).value;
        prop_assert!((got - common::fairness_oracle(&h, &labels)).abs() <= 1e-12);
        let mut scaled = h.clone();
        scaled.scale(scale);
        prop_assert!((fairness_loss(&scaled, &labels).value - got).abs() <= 1e-12);
    }

    #[test]
    fn forward_is_permutation_equivariant(seed in any::<u64>(), perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle()) {
        let g = common::random_graph(12, 20, 3, seed);
        let params = ModelParams::init(dims(3), seed);
        let a = forward(&params, &normalized_adjacency(&g), g.features()).unwrap();
        let pg = permuted(&g, &perm);
        let b = forward(&params, &normalized_adjacency(&pg), pg.features()).unwrap();
        for u in 0..12 {
            for (x, y) in a.logits.row(u).iter().zip(b.logits.row(perm[u])) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn duplicated_graph_keeps_task_gradients(seed in any::<u64>()) {
        let g = common::random_graph(10, 15, 3, seed);
        let gg = doubled(&g);
        let mask: Vec<usize> = (0..10).collect();
        let mask2: Vec<usize> = (0..20).collect();
        let params = ModelParams::init(dims(3), seed);
        let obj = |labels, mask| Objective { labels, mask, coreset: &[], lambda: 0.0, weights: None };
        let (g1, l1) = gradients(&params, &normalized_adjacency(&g), g.features(), &obj(g.labels(), &mask)).unwrap();
        let (g2, l2) = gradients(&params, &normalized_adjacency(&gg), gg.features(), &obj(gg.labels(), &mask2)).unwrap();
        prop_assert!((l1.task - l2.task).abs() <= 1e-12);
        for ((_, a), (_, b)) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}

#[test]
fn gradient_check_on_random_graphs() {
    for seed in 0..5 {
        let g = common::random_graph(10, 15, 3, seed);
        let params = ModelParams::init(dims(3), seed);
        let mask: Vec<usize> = (0..10).collect();
        let coreset: Vec<usize> = (0..10).step_by(2).collect();
        for lambda in [0.0, 1.0] {
            let obj = Objective {
                labels: g.labels(),
                mask: &mask,
                coreset: &coreset,
                lambda,
                weights: None,
            };
            let err = common::gradient_check(
                &params,
                &normalized_adjacency(&g),
                g.features(),
                &obj,
                1e-5,
                1e-7,
            );
            assert!(err < 1e-4, "seed {seed} λ={lambda}: {err}");
        }
        let weights: Vec<f64> = (0..10).map(|u| 0.5 + u as f64 / 10.0).collect();
        let obj = Objective {
            labels: g.labels(),
            mask: &mask,
            coreset: &coreset,
            lambda: 1.0,
            weights: Some(&weights),
        };
        let err = common::gradient_check(
            &params,
            &normalized_adjacency(&g),
            g.features(),
            &obj,
            1e-5,
            1e-7,
        );
        assert!(err < 1e-4, "weighted, seed {seed}: {err}");
    }
}

fn separable() -> Graph {
    generate_sbm(
        &SbmConfig {
            block_sizes: vec![100, 100],
            p_in: 0.05,
            p_out: 0.01,
            sens_alignment: 0.8,
            label_homophily: Some(vec![0.95, 0.95]),
            positive_rate: None,
            feature_dim: 8,
            feature_signal: 6.0,
        },
        5,
    )
    .unwrap()
}

fn quick(lambda: f64) -> TrainConfig {
    TrainConfig {
        epochs: 150,
        lambda,
        hidden1: 16,
        hidden2: 16,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_graph_is_learned() {
    let g = separable();
    let split = split_nodes(&g, [0.5, 0.25, 0.25], 0, true).unwrap();
    let out = train(&g, &split, None, &quick(0.0)).unwrap();
    let last = out.history.records.last().unwrap();
    assert!(last.train_acc >= 0.95, "train accuracy {}", last.train_acc);
}

#[test]
fn zero_lambda_is_plain_gcn_and_training_is_reproducible() {
    let g = separable();
    let split = split_nodes(&g, [0.5, 0.25, 0.25], 0, true).unwrap();
    let communities: Vec<usize> = (0..200).map(|u| u / 100).collect();
    let coreset = select_coreset(
        &g,
        &communities,
        &homophily_profile(&g),
        &split,
        &CoresetConfig::default(),
    )
    .unwrap();
    let plain = train(&g, &split, None, &quick(0.0)).unwrap();
    let with_coreset = train(&g, &split, Some(&coreset), &quick(0.0)).unwrap();
    assert_eq!(plain.params, with_coreset.params);
    for (a, b) in plain
        .history
        .records
        .iter()
        .zip(&with_coreset.history.records)
    {
        assert_eq!(
            (a.task_loss, a.train_acc, a.val_acc),
            (b.task_loss, b.train_acc, b.val_acc)
        );
        assert_eq!(b.total_loss, b.task_loss);
    }
    let fair = train(&g, &split, Some(&coreset), &quick(1.0)).unwrap();
    let again = train(&g, &split, Some(&coreset), &quick(1.0)).unwrap();
    assert_eq!(fair.params, again.params);
    assert_eq!(fair.history, again.history);
    assert_ne!(fair.params, plain.params);
}
