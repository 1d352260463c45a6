//! Structural node embeddings: second-order biased random walks followed by
//! skip-gram training with negative sampling.
//!
//! A walk at `cur` having arrived from `prev` moves to neighbor `x` with
//! unnormalized weight
//!
//! ```text
//! 1/p  if x == prev
//! 1    if x is also a neighbor of prev
//! 1/q  otherwise
//! ```
//!
//! Walk transition weights are computed on the fly rather than from
//! precomputed alias tables; at the graph sizes this crate targets the
//! per-step cost is a few binary searches.
//!
//! The skip-gram objective replaces the full softmax over nodes with
//! negative sampling from the unigram distribution raised to the 3/4 power.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, Matrix};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub num_nodes: usize,
}

impl WalkCorpus {
    pub fn num_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub matrix: Matrix,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 40,
            p: 1.0,
            q: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly towards zero.
    pub lr: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
        }
    }
}

/// One biased transition out of `cur`.
pub fn walk_step(
    graph: &Graph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
    rng: &mut Rng,
) -> Result<usize> {
    let nbrs = graph.neighbors(cur);
    match (nbrs, prev) {
        ([], _) => Err(Error::NoNeighbors(cur)),
        ([only], _) => Ok(*only),
        (_, None) => Ok(nbrs[rng.random_range(0..nbrs.len())]),
        (_, Some(prev)) => {
            let weight = |x: usize| {
                if x == prev {
                    1.0 / p
                } else if graph.has_edge(prev, x) {
                    1.0
                } else {
                    1.0 / q
                }
            };
            let total: f64 = nbrs.iter().map(|&x| weight(x)).sum();
            let mut target = rng.random::<f64>() * total;
            for &x in nbrs {
                target -= weight(x);
                if target < 0.0 {
                    return Ok(x);
                }
            }
            // Rounding left a sliver of mass past the last neighbor.
            Ok(nbrs[nbrs.len() - 1])
        }
    }
}

fn single_walk(graph: &Graph, start: usize, config: &WalkConfig, rng: &mut Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(config.walk_length);
    walk.push(start);
    let mut prev = None;
    while walk.len() < config.walk_length {
        let cur = walk[walk.len() - 1];
        match walk_step(graph, prev, cur, config.p, config.q, rng) {
            Ok(next) => {
                prev = Some(cur);
                walk.push(next);
            }
            Err(_) => break,
        }
    }
    walk
}

/// `walks_per_node` rounds over all nodes; walk `round * n + start` draws from
/// its own RNG stream, so the corpus is independent of thread count.
pub fn generate_walks(graph: &Graph, config: &WalkConfig, seed: u64) -> Result<WalkCorpus> {
    if config.walks_per_node == 0 || config.walk_length == 0 {
        return Err(Error::ConfigInvalid(
            "walks_per_node and walk_length must be at least 1".into(),
        ));
    }
    if !(config.p > 0.0 && config.q > 0.0) {
        return Err(Error::ConfigInvalid("p and q must be positive".into()));
    }
    let n = graph.num_nodes();
    let walks = (0..config.walks_per_node * n)
        .into_par_iter()
        .map(|idx| {
            let mut rng = rng::stream(seed, idx as u64);
            single_walk(graph, idx % n, config, &mut rng)
        })
        .collect();
    Ok(WalkCorpus {
        walks,
        walks_per_node: config.walks_per_node,
        walk_length: config.walk_length,
        num_nodes: n,
    })
}

/// Unigram^(3/4) noise distribution over node ids.
pub fn noise_distribution(corpus: &WalkCorpus) -> Vec<f64> {
    let mut counts = vec![0usize; corpus.num_nodes];
    for walk in &corpus.walks {
        for &u in walk {
            counts[u] += 1;
        }
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

struct NegativeSampler {
    dist: WeightedIndex<f64>,
    support: usize,
}

impl NegativeSampler {
    fn new(noise: &[f64]) -> Self {
        Self {
            dist: WeightedIndex::new(noise).expect("noise distribution has positive mass"),
            support: noise.iter().filter(|&&w| w > 0.0).count(),
        }
    }

    /// A noise node different from `positive`, or `None` if none exists.
    fn draw(&self, positive: usize, rng: &mut Rng) -> Option<usize> {
        if self.support < 2 {
            return None;
        }
        loop {
            let x = self.dist.sample(rng);
            if x != positive {
                return Some(x);
            }
        }
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramResult {
    pub embeddings: EmbeddingMatrix,
    /// Mean loss per (center, context) pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

impl SkipGramResult {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().expect("at least one epoch")
    }
}

/// Single-threaded SGD over the corpus in fixed order; bitwise reproducible.
pub fn train_skipgram(
    corpus: &WalkCorpus,
    config: &SkipGramConfig,
    seed: u64,
) -> Result<SkipGramResult> {
    if corpus.walks.is_empty() || corpus.num_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    if config.dim == 0 || config.window == 0 || config.negatives == 0 || config.epochs == 0 {
        return Err(Error::ConfigInvalid(
            "dim, window, negatives and epochs must be at least 1".into(),
        ));
    }
    if !(config.lr > 0.0) {
        return Err(Error::ConfigInvalid("lr must be positive".into()));
    }
    let n = corpus.num_nodes;
    let d = config.dim;
    let mut rng = rng::seeded(seed);
    let half = 0.5 / d as f64;
    let mut input = Matrix::from_vec(
        n,
        d,
        (0..n * d).map(|_| rng.random_range(-half..half)).collect(),
    );
    let mut output = Matrix::zeros(n, d);
    let sampler = NegativeSampler::new(&noise_distribution(corpus));

    let total_steps = (config.epochs * corpus.num_tokens()) as f64;
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0; d];
    let mut targets: Vec<(usize, f64)> = Vec::with_capacity(config.negatives + 1);

    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for walk in &corpus.walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = config.lr * (1.0 - step as f64 / total_steps).max(1e-4);
                step += 1;
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window + 1).min(walk.len());
                for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    targets.clear();
                    targets.push((context, 1.0));
                    for _ in 0..config.negatives {
                        if let Some(neg) = sampler.draw(context, &mut rng) {
                            targets.push((neg, 0.0));
                        }
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for &(t, label) in &targets {
                        let score = dot(input.row(center), output.row(t));
                        loss_sum -= if label > 0.0 {
                            log_sigmoid(score)
                        } else {
                            log_sigmoid(-score)
                        };
                        let g = (label - sigmoid(score)) * lr;
                        for (acc, &o) in grad.iter_mut().zip(output.row(t)) {
                            *acc += g * o;
                        }
                        for (o, c) in output.row_mut(t).iter_mut().zip(input.row(center)) {
                            *o += g * c;
                        }
                    }
                    for (c, g) in input.row_mut(center).iter_mut().zip(&grad) {
                        *c += g;
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs > 0 {
            loss_sum / pairs as f64
        } else {
            0.0
        });
    }
    Ok(SkipGramResult {
        embeddings: EmbeddingMatrix { matrix: input },
        epoch_losses,
    })
}
