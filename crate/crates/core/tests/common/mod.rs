//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use commaudit::gnn::{evaluate, forward, gradients, ModelParams, Objective};
use commaudit::{Graph, Matrix, SparseOperator};
use rand::Rng;

pub fn random_graph(n: usize, m: usize, feature_dim: usize, seed: u64) -> Graph {
    let mut rng = commaudit::rng::seeded(seed);
    let mut edges = std::collections::BTreeSet::new();
    while edges.len() < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let features = Matrix::from_vec(
        n,
        feature_dim,
        (0..n * feature_dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    );
    let labels: Vec<usize> = (0..n).map(|u| (u + rng.random_range(0..2)) % 2).collect();
    let sensitive: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    Graph::from_edges(n, &edges, features, labels, sensitive).unwrap()
}

/// Same-label share of incident edges, from a scan of the full edge list.
pub fn homophily_oracle(graph: &Graph) -> Vec<Option<f64>> {
    let n = graph.num_nodes();
    let mut deg = vec![0usize; n];
    let mut same = vec![0usize; n];
    let labels = graph.labels();
    for (u, v) in graph.edges() {
        deg[u] += 1;
        deg[v] += 1;
        if labels[u] == labels[v] {
            same[u] += 1;
            same[v] += 1;
        }
    }
    (0..n)
        .map(|u| (deg[u] > 0).then(|| same[u] as f64 / deg[u] as f64))
        .collect()
}

pub fn accuracy_oracle(pred: &[usize], labels: &[usize], nodes: &[usize]) -> Option<f64> {
    if nodes.is_empty() {
        return None;
    }
    let mut correct = 0;
    for &u in nodes {
        if pred[u] == labels[u] {
            correct += 1;
        }
    }
    Some(correct as f64 / nodes.len() as f64)
}

fn rate(pred: &[usize], nodes: impl Iterator<Item = usize>) -> Option<f64> {
    let (mut hits, mut total) = (0, 0);
    for u in nodes {
        total += 1;
        if pred[u] == 1 {
            hits += 1;
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

pub fn sp_oracle(pred: &[usize], sensitive: &[u8], nodes: &[usize]) -> Option<f64> {
    let r0 = rate(pred, nodes.iter().copied().filter(|&u| sensitive[u] == 0))?;
    let r1 = rate(pred, nodes.iter().copied().filter(|&u| sensitive[u] == 1))?;
    Some(r0 - r1)
}

pub fn eo_oracle(
    pred: &[usize],
    labels: &[usize],
    sensitive: &[u8],
    nodes: &[usize],
) -> Option<f64> {
    let pos = |s: u8| {
        nodes
            .iter()
            .copied()
            .filter(move |&u| sensitive[u] == s && labels[u] == 1)
    };
    Some(rate(pred, pos(0))? - rate(pred, pos(1))?)
}

/// Fraction of (positive, negative) pairs ordered correctly, ties worth 1/2.
pub fn auc_oracle(scores: &[f64], labels: &[usize], nodes: &[usize]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0usize);
    for &i in nodes {
        for &j in nodes {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// Worst relative disagreement between analytic gradients and central
/// differences of the total loss. Relative error is
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(
    params: &ModelParams,
    adj: &SparseOperator,
    x: &Matrix,
    objective: &Objective<'_>,
    step: f64,
    floor: f64,
) -> f64 {
    let (grad, _) = gradients(params, adj, x, objective).unwrap();
    let loss = |p: &ModelParams| {
        evaluate(&forward(p, adj, x).unwrap(), objective)
            .unwrap()
            .total
    };
    let mut worst: f64 = 0.0;
    for (t, (_, analytic)) in grad.tensors().iter().enumerate() {
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = params.clone();
            plus.tensors_mut()[t].1[i] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[t].1[i] -= step;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Mean pairwise cosine per label group, recomputed over ordered pairs.
pub fn fairness_oracle(h: &Matrix, labels: &[usize]) -> f64 {
    let mut mean = [0.0; 2];
    for (y, slot) in mean.iter_mut().enumerate() {
        let rows: Vec<usize> = (0..h.rows()).filter(|&i| labels[i] == y).collect();
        let (mut sum, mut count) = (0.0, 0usize);
        for &i in &rows {
            for &j in &rows {
                if i != j {
                    let (a, b) = (h.row(i), h.row(j));
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                    sum += if na == 0.0 || nb == 0.0 {
                        0.0
                    } else {
                        dot / (na * nb)
                    };
                    count += 1;
                }
            }
        }
        *slot = if count == 0 { 0.0 } else { sum / count as f64 };
    }
    (mean[0] - mean[1]).abs()
}
