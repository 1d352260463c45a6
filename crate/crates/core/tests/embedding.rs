mod common;

use commaudit::embed::{
    generate_walks, noise_distribution, train_skipgram, walk_step, SkipGramConfig, WalkConfig,
};
use commaudit::linalg::cosine;
use commaudit::{Graph, Matrix};
use proptest::prelude::*;

fn two_cliques(size: usize) -> Graph {
    let mut edges = Vec::new();
    for offset in [0, size] {
        for u in 0..size {
            for v in u + 1..size {
                edges.push((offset + u, offset + v));
            }
        }
    }
    let n = 2 * size;
    Graph::from_edges(n, &edges, Matrix::zeros(n, 1), vec![0; n], vec![0; n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walks_follow_edges(
        n in 2usize..20,
        m in 1usize..40,
        seed in any::<u64>(),
        p in 0.1f64..10.0,
        q in 0.1f64..10.0,
    ) {
        let g = common::random_graph(n, m.min(n * (n - 1) / 2), 1, seed);
        let cfg = WalkConfig { walks_per_node: 2, walk_length: 12, p, q };
        let corpus = generate_walks(&g, &cfg, seed).unwrap();
        prop_assert_eq!(corpus.walks.len(), 2 * n);
        for walk in &corpus.walks {
            for pair in walk.windows(2) {
                prop_assert!(g.has_edge(pair[0], pair[1]), "{:?} is not an edge", pair);
            }
            if g.degree(walk[0]) > 0 {
                prop_assert_eq!(walk.len(), 12);
            }
        }
        let noise = noise_distribution(&corpus);
        prop_assert!((noise.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn first_step_is_uniform_over_neighbors() {
    let g = two_cliques(6);
    let mut rng = commaudit::rng::seeded(3);
    let steps = 10_000;
    let mut counts = [0usize; 12];
    for _ in 0..steps {
        counts[walk_step(&g, None, 0, 0.25, 4.0, &mut rng).unwrap()] += 1;
    }
    let expected = steps as f64 / 5.0;
    let sigma = (steps as f64 * 0.2 * 0.8).sqrt();
    for (v, &c) in counts.iter().enumerate() {
        if (1..6).contains(&v) {
            assert!(
                (c as f64 - expected).abs() <= 3.0 * sigma,
                "neighbor {v}: {c}"
            );
        } else {
            assert_eq!(c, 0);
        }
    }
}

#[test]
fn return_parameter_controls_backtracking() {
    let g = two_cliques(3);
    let mut rng = commaudit::rng::seeded(8);
    let returns = |p: f64, rng: &mut commaudit::rng::Rng| {
        (0..10_000)
            .filter(|_| walk_step(&g, Some(0), 1, p, 1.0, rng).unwrap() == 0)
            .count()
    };
    // weights: return 1/p, the other clique member 1
    let low = returns(1e9, &mut rng);
    let high = returns(1e-9, &mut rng);
    assert!(low < 100, "{low}");
    assert!(high > 9_900, "{high}");
}

#[test]
fn skipgram_separates_disjoint_cliques() {
    let g = two_cliques(10);
    let corpus = generate_walks(
        &g,
        &WalkConfig {
            walks_per_node: 10,
            walk_length: 20,
            p: 1.0,
            q: 1.0,
        },
        42,
    )
    .unwrap();
    let trained = train_skipgram(
        &corpus,
        &SkipGramConfig {
            dim: 16,
            ..SkipGramConfig::default()
        },
        42,
    )
    .unwrap();
    let e = &trained.embeddings.matrix;
    let (mut intra, mut inter) = ((0.0, 0), (0.0, 0));
    for u in 0..20 {
        for v in u + 1..20 {
            let c = cosine(e.row(u), e.row(v));
            if (u < 10) == (v < 10) {
                intra = (intra.0 + c, intra.1 + 1);
            } else {
                inter = (inter.0 + c, inter.1 + 1);
            }
        }
    }
    let (intra, inter) = (intra.0 / intra.1 as f64, inter.0 / inter.1 as f64);
    assert!(intra > inter, "intra {intra} inter {inter}");
    let losses = &trained.epoch_losses;
    assert!(losses[2] < losses[0], "epoch losses {losses:?}");
}

#[test]
fn embeddings_are_reproducible() {
    let g = common::random_graph(30, 60, 1, 4);
    let run = || {
        let corpus = generate_walks(&g, &WalkConfig::default(), 9).unwrap();
        train_skipgram(
            &corpus,
            &SkipGramConfig {
                dim: 8,
                epochs: 2,
                ..SkipGramConfig::default()
            },
            9,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.embeddings.matrix, b.embeddings.matrix);
    assert_eq!(a.epoch_losses, b.epoch_losses);
}
