//! Fairness-aware coreset selection.
//!
//! Every community receives a budget proportional to its size. Half of it is
//! spent on each sensitive subgroup, drawing from training nodes ranked by
//! neighborhood homophily: the most and the least homophilous nodes of each
//! (community, subgroup) cell, so the fairness loss sees both ends of the
//! neighborhood-label spectrum everywhere in the graph.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSplit};
use crate::homophily::HomophilyProfile;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Highest and lowest homophily ratios, ties by ascending node id.
    Extremal,
    /// Uniform sample per cell; the ablation baseline.
    Random { seed: u64 },
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Extremal => f.write_str("extremal"),
            Strategy::Random { .. } => f.write_str("random"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoresetConfig {
    pub total_budget: usize,
    pub strategy: Strategy,
    /// Fixed budget per community instead of the proportional share.
    pub per_community: Option<usize>,
}

impl Default for CoresetConfig {
    fn default() -> Self {
        Self {
            total_budget: 30,
            strategy: Strategy::Extremal,
            per_community: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetEntry {
    pub node: usize,
    pub community: usize,
    pub sensitive: u8,
    pub ratio: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub community: usize,
    pub group: u8,
    pub requested: usize,
    pub available: usize,
}

impl Shortfall {
    pub fn missing(&self) -> usize {
        self.requested - self.available
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coreset {
    pub entries: Vec<CoresetEntry>,
    pub total_budget: usize,
    pub strategy: Strategy,
    /// Budget `n_k` of every community.
    pub budgets: Vec<usize>,
    pub shortfalls: Vec<Shortfall>,
    pub warnings: Vec<String>,
}

impl Coreset {
    pub fn nodes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.node).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in cell `(community, group)`.
    pub fn cell_count(&self, community: usize, group: u8) -> usize {
        self.entries
            .iter()
            .filter(|e| e.community == community && e.sensitive == group)
            .count()
    }

    /// Total shortfall recorded for a community, over both groups.
    pub fn community_shortfall(&self, community: usize) -> usize {
        self.shortfalls
            .iter()
            .filter(|s| s.community == community)
            .map(Shortfall::missing)
            .sum()
    }

    /// CSV with header `node_id,community,sensitive,ratio,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,community,sensitive,ratio,weight\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.node, e.community, e.sensitive, e.ratio, e.weight
            ));
        }
        out
    }
}

/// `⌊k_total · size / total⌋`, computed in integers.
pub fn community_budget(community_size: usize, total_nodes: usize, k_total: usize) -> usize {
    assert!(community_size <= total_nodes && total_nodes > 0);
    k_total * community_size / total_nodes
}

fn pick_extremal(mut pool: Vec<(usize, f64)>, take: usize) -> Vec<(usize, f64)> {
    if pool.len() <= take {
        return pool;
    }
    let top = take.div_ceil(2);
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut picked: Vec<(usize, f64)> = pool[..top].to_vec();
    let mut rest = pool.split_off(top);
    rest.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    picked.extend_from_slice(&rest[..take - top]);
    picked
}

pub fn select_coreset(
    graph: &Graph,
    communities: &[usize],
    profile: &HomophilyProfile,
    split: &NodeSplit,
    config: &CoresetConfig,
) -> Result<Coreset> {
    let n = graph.num_nodes();
    if communities.len() != n {
        return Err(Error::DimensionMismatch {
            what: "community assignment",
            expected: n,
            found: communities.len(),
        });
    }
    if profile.len() != n {
        return Err(Error::DimensionMismatch {
            what: "homophily profile",
            expected: n,
            found: profile.len(),
        });
    }
    if split.train.is_empty() {
        return Err(Error::EmptyTrainingSplit);
    }
    let num_communities = communities.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; num_communities];
    for &c in communities {
        sizes[c] += 1;
    }

    let mut coreset = Coreset {
        entries: Vec::new(),
        total_budget: config.total_budget,
        strategy: config.strategy,
        budgets: Vec::with_capacity(num_communities),
        shortfalls: Vec::new(),
        warnings: Vec::new(),
    };
    for k in 0..num_communities {
        let budget = match config.per_community {
            Some(b) => b,
            None if sizes[k] == 0 => 0,
            None => community_budget(sizes[k], n, config.total_budget),
        };
        coreset.budgets.push(budget);
        let per_group = budget / 2;
        for group in 0..=1u8 {
            let pool: Vec<(usize, f64)> = split
                .train
                .iter()
                .filter(|&&u| communities[u] == k && graph.sensitive()[u] == group)
                .filter_map(|&u| profile.ratio[u].map(|r| (u, r)))
                .collect();
            if pool.is_empty() {
                coreset.warnings.push(format!(
                    "community {k} has no training candidates in group {group}"
                ));
            }
            if pool.len() < per_group {
                coreset.shortfalls.push(Shortfall {
                    community: k,
                    group,
                    requested: per_group,
                    available: pool.len(),
                });
            }
            let mut picked = match config.strategy {
                Strategy::Extremal => pick_extremal(pool, per_group),
                Strategy::Random { seed } => {
                    let mut pool = pool;
                    let cell = (k as u64) * 2 + group as u64;
                    pool.shuffle(&mut rng::stream(seed, cell));
                    pool.truncate(per_group);
                    pool
                }
            };
            picked.sort_by_key(|&(u, _)| u);
            coreset
                .entries
                .extend(picked.into_iter().map(|(node, ratio)| CoresetEntry {
                    node,
                    community: k,
                    sensitive: group,
                    ratio,
                    weight: 1.0,
                }));
        }
    }
    Ok(coreset)
}
