//! Synthetic polarized graphs from a stochastic block model.
//!
//! Blocks stand in for communities. Each block has a majority sensitive bit
//! (block `b` uses `b % 2`) and its own label-homophily target, so same-label
//! nodes in different blocks see different neighborhood label mixes.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmConfig {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    /// Probability that a node carries its block's majority sensitive bit.
    pub sens_alignment: f64,
    /// Per-block target fraction of same-label edges. `None` keeps raw SBM edges.
    #[serde(default)]
    pub label_homophily: Option<Vec<f64>>,
    /// Per-block `P(y = 1)`; defaults to 0.5 everywhere.
    #[serde(default)]
    pub positive_rate: Option<Vec<f64>>,
    pub feature_dim: usize,
    /// Euclidean distance between the two class means; noise is unit Gaussian.
    pub feature_signal: f64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.block_sizes.is_empty() {
            return bad("block_sizes is empty".into());
        }
        if let Some(b) = self.block_sizes.iter().find(|&&b| b < 2) {
            return bad(format!("block size {b} < 2"));
        }
        if !unit(self.p_in) || !unit(self.p_out) {
            return bad("edge probabilities must lie in [0, 1]".into());
        }
        if !(0.5..=1.0).contains(&self.sens_alignment) {
            return bad("sens_alignment must lie in [0.5, 1]".into());
        }
        for (name, per_block) in [
            ("label_homophily", &self.label_homophily),
            ("positive_rate", &self.positive_rate),
        ] {
            if let Some(v) = per_block {
                if v.len() != self.block_sizes.len() {
                    return bad(format!("{name} needs one value per block"));
                }
                if !v.iter().all(|&x| unit(x)) {
                    return bad(format!("{name} values must lie in [0, 1]"));
                }
            }
        }
        if self.feature_dim < 2 {
            return bad("feature_dim must be at least 2".into());
        }
        if !(self.feature_signal >= 0.0) {
            return bad("feature_signal must be non-negative".into());
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Block id of every node; blocks occupy contiguous id ranges.
    pub fn blocks(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
            .collect()
    }
}

/// Acceptance probabilities `(same_label, cross_label)` that move a pool whose
/// natural same-label fraction is `natural` to `target` in expectation.
fn acceptance(natural: f64, target: f64) -> (f64, f64) {
    if natural <= 0.0 || natural >= 1.0 {
        return (1.0, 1.0);
    }
    if target >= natural {
        if target >= 1.0 {
            (1.0, 0.0)
        } else {
            (1.0, natural * (1.0 - target) / (target * (1.0 - natural)))
        }
    } else {
        (target * (1.0 - natural) / (natural * (1.0 - target)), 1.0)
    }
}

pub fn generate_sbm(config: &SbmConfig, seed: u64) -> Result<Graph> {
    config.validate()?;
    let mut rng = rng::seeded(seed);
    let blocks = config.blocks();
    let n = blocks.len();
    let num_blocks = config.block_sizes.len();

    let sensitive: Vec<u8> = blocks
        .iter()
        .map(|&b| {
            let majority = (b % 2) as u8;
            if rng.random::<f64>() < config.sens_alignment {
                majority
            } else {
                1 - majority
            }
        })
        .collect();
    let labels: Vec<usize> = blocks
        .iter()
        .map(|&b| {
            let rate = config.positive_rate.as_ref().map_or(0.5, |r| r[b]);
            usize::from(rng.random::<f64>() < rate)
        })
        .collect();

    // Realized positive rate per block fixes the natural same-label fraction.
    let mut positives = vec![0usize; num_blocks];
    for (&b, &y) in blocks.iter().zip(&labels) {
        positives[b] += y;
    }
    let pi: Vec<f64> = positives
        .iter()
        .zip(&config.block_sizes)
        .map(|(&p, &s)| p as f64 / s as f64)
        .collect();
    let accept: Option<Vec<Vec<(f64, f64)>>> = config.label_homophily.as_ref().map(|h| {
        (0..num_blocks)
            .map(|a| {
                (0..num_blocks)
                    .map(|b| {
                        let natural = pi[a] * pi[b] + (1.0 - pi[a]) * (1.0 - pi[b]);
                        acceptance(natural, 0.5 * (h[a] + h[b]))
                    })
                    .collect()
            })
            .collect()
    });

    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if blocks[u] == blocks[v] {
                config.p_in
            } else {
                config.p_out
            };
            if rng.random::<f64>() >= p {
                continue;
            }
            if let Some(accept) = &accept {
                let (same, cross) = accept[blocks[u]][blocks[v]];
                let keep = if labels[u] == labels[v] { same } else { cross };
                if rng.random::<f64>() >= keep {
                    continue;
                }
            }
            edges.push((u, v));
        }
    }

    let k = config.feature_dim;
    let offset = config.feature_signal / std::f64::consts::SQRT_2;
    let mut features = Matrix::zeros(n, k);
    for u in 0..n {
        let row = features.row_mut(u);
        for x in row.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        row[labels[u] % k] += offset;
    }

    Graph::from_edges(n, &edges, features, labels, sensitive)
}
