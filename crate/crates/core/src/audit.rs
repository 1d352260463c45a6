//! Utility and group-fairness metrics, per graph and per community.
//!
//! Gaps are reported both signed (`group 0 − group 1`) and absolute. The
//! signed value shows which group a community favors; pooled absolute values
//! can hide communities that are biased in opposite directions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub signed: f64,
    pub abs: f64,
}

impl Gap {
    fn new(signed: f64) -> Self {
        Self {
            signed,
            abs: signed.abs(),
        }
    }
}

pub fn accuracy(pred: &[usize], labels: &[usize], nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::EmptyScope);
    }
    let hits = nodes.iter().filter(|&&u| pred[u] == labels[u]).count();
    Ok(hits as f64 / nodes.len() as f64)
}

/// Probability that a random positive (label 1) outscores a random negative,
/// ties counting one half. Computed from midranks in `O(m log m)`.
pub fn auc(scores: &[f64], labels: &[usize], nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::EmptyScope);
    }
    let mut ranked: Vec<(f64, bool)> = nodes.iter().map(|&u| (scores[u], labels[u] == 1)).collect();
    let positives = ranked.iter().filter(|r| r.1).count();
    let negatives = ranked.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassScope);
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Twice the positive rank sum, kept integral so ties stay exact.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < ranked.len() {
        let mut j = i;
        while j + 1 < ranked.len() && ranked[j + 1].0 == ranked[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share midrank (i + j + 2) / 2
        let tied_pos = ranked[i..=j].iter().filter(|r| r.1).count() as u64;
        twice_rank_sum += tied_pos * (i + j + 2) as u64;
        i = j + 1;
    }
    let (p, q) = (positives as u64, negatives as u64);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * q) as f64)
}

fn positive_rate(pred: &[usize], nodes: impl Iterator<Item = usize>) -> Option<f64> {
    let (hits, total) = nodes.fold((0usize, 0usize), |(h, t), u| {
        (h + usize::from(pred[u] == 1), t + 1)
    });
    (total > 0).then(|| hits as f64 / total as f64)
}

/// `P(ŷ=1 | s=0) − P(ŷ=1 | s=1)`.
pub fn statistical_parity(pred: &[usize], sensitive: &[u8], nodes: &[usize]) -> Result<Gap> {
    let rate = |g: u8| {
        positive_rate(pred, nodes.iter().copied().filter(|&u| sensitive[u] == g))
            .ok_or(Error::MissingGroup(g))
    };
    Ok(Gap::new(rate(0)? - rate(1)?))
}

/// `P(ŷ=1 | y=1, s=0) − P(ŷ=1 | y=1, s=1)`.
pub fn equal_opportunity(
    pred: &[usize],
    labels: &[usize],
    sensitive: &[u8],
    nodes: &[usize],
) -> Result<Gap> {
    let tpr = |g: u8| {
        positive_rate(
            pred,
            nodes
                .iter()
                .copied()
                .filter(|&u| sensitive[u] == g && labels[u] == 1),
        )
        .ok_or(Error::MissingPositives(g))
    };
    Ok(Gap::new(tpr(0)? - tpr(1)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scope {
    Graph,
    Community(usize),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Graph => f.write_str("graph"),
            Scope::Community(c) => write!(f, "{c}"),
        }
    }
}

impl Serialize for Scope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "graph" {
            return Ok(Scope::Graph);
        }
        s.parse()
            .map(Scope::Community)
            .map_err(|_| serde::de::Error::custom(format!("invalid scope `{s}`")))
    }
}

/// Metrics for one scope. `None` marks a metric whose precondition fails
/// in this scope (for example, no positives in one group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeRecord {
    pub scope: Scope,
    pub size: usize,
    /// Node counts for `s = 0` and `s = 1`.
    pub group_counts: [usize; 2],
    /// Nodes with `y = 1` for `s = 0` and `s = 1`.
    pub group_positives: [usize; 2],
    pub acc: Option<f64>,
    pub auc: Option<f64>,
    pub sp_signed: Option<f64>,
    pub sp_abs: Option<f64>,
    pub eo_signed: Option<f64>,
    pub eo_abs: Option<f64>,
}

impl ScopeRecord {
    pub fn metric_abs(&self, metric: FairnessMetric) -> Option<f64> {
        match metric {
            FairnessMetric::Sp => self.sp_abs,
            FairnessMetric::Eo => self.eo_abs,
        }
    }

    pub fn all_defined(&self) -> bool {
        [
            self.acc,
            self.auc,
            self.sp_signed,
            self.sp_abs,
            self.eo_signed,
            self.eo_abs,
        ]
        .iter()
        .all(Option::is_some)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub model_id: String,
    pub dataset_id: String,
    pub num_communities: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    /// Graph scope first, then communities in id order.
    pub scopes: Vec<ScopeRecord>,
}

pub const METRIC_COLUMNS: [&str; 6] = ["acc", "auc", "sp_signed", "sp_abs", "eo_signed", "eo_abs"];

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

impl FairnessReport {
    pub fn graph(&self) -> Option<&ScopeRecord> {
        self.scopes.iter().find(|r| r.scope == Scope::Graph)
    }

    pub fn communities(&self) -> impl Iterator<Item = &ScopeRecord> {
        self.scopes.iter().filter(|r| r.scope != Scope::Graph)
    }

    /// Largest community-level absolute gap for a metric, if any is defined.
    pub fn worst_community(&self, metric: FairnessMetric) -> Option<f64> {
        self.communities()
            .filter_map(|r| r.metric_abs(metric))
            .reduce(f64::max)
    }

    /// One row per scope.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scope,size,n_s0,n_s1,pos_s0,pos_s1,acc,auc,sp_signed,sp_abs,eo_signed,eo_abs\n",
        );
        for r in &self.scopes {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.scope,
                r.size,
                r.group_counts[0],
                r.group_counts[1],
                r.group_positives[0],
                r.group_positives[1],
                cell(r.acc),
                cell(r.auc),
                cell(r.sp_signed),
                cell(r.sp_abs),
                cell(r.eo_signed),
                cell(r.eo_abs),
            ));
        }
        out
    }

    /// Metric × scope matrix: one row per metric, one column per scope.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("metric");
        for r in &self.scopes {
            out.push_str(&format!(",{}", r.scope));
        }
        out.push('\n');
        for (m, name) in METRIC_COLUMNS.iter().enumerate() {
            out.push_str(name);
            for r in &self.scopes {
                let v = [r.acc, r.auc, r.sp_signed, r.sp_abs, r.eo_signed, r.eo_abs][m];
                out.push(',');
                out.push_str(&cell(v));
            }
            out.push('\n');
        }
        out
    }
}

fn scope_record(
    scope: Scope,
    nodes: &[usize],
    pred: &[usize],
    scores: &[f64],
    labels: &[usize],
    sensitive: &[u8],
) -> ScopeRecord {
    let mut group_counts = [0; 2];
    let mut group_positives = [0; 2];
    for &u in nodes {
        let g = sensitive[u] as usize;
        group_counts[g] += 1;
        group_positives[g] += usize::from(labels[u] == 1);
    }
    let sp = statistical_parity(pred, sensitive, nodes).ok();
    let eo = equal_opportunity(pred, labels, sensitive, nodes).ok();
    ScopeRecord {
        scope,
        size: nodes.len(),
        group_counts,
        group_positives,
        acc: accuracy(pred, labels, nodes).ok(),
        auc: auc(scores, labels, nodes).ok(),
        sp_signed: sp.map(|g| g.signed),
        sp_abs: sp.map(|g| g.abs),
        eo_signed: eo.map(|g| g.signed),
        eo_abs: eo.map(|g| g.abs),
    }
}

/// Pooled metrics over `nodes` plus one record per community with members in
/// `nodes`. Per-node slices are indexed by node id; `nodes` is the evaluation
/// set (typically the test split).
pub fn community_report(
    pred: &[usize],
    scores: &[f64],
    labels: &[usize],
    sensitive: &[u8],
    communities: &[usize],
    nodes: &[usize],
    metadata: ReportMetadata,
) -> FairnessReport {
    let num_communities = communities.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_communities];
    for &u in nodes {
        members[communities[u]].push(u);
    }
    let mut scopes = vec![scope_record(
        Scope::Graph,
        nodes,
        pred,
        scores,
        labels,
        sensitive,
    )];
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() {
            scopes.push(scope_record(
                Scope::Community(c),
                m,
                pred,
                scores,
                labels,
                sensitive,
            ));
        }
    }
    FairnessReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: ReportMetadata {
            num_communities,
            ..metadata
        },
        scopes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMetric {
    Sp,
    Eo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paradox {
    pub community: usize,
    pub metric: FairnessMetric,
    pub community_abs: f64,
    pub graph_abs: f64,
}

/// Every (community, metric) whose absolute gap exceeds the pooled graph
/// gap by more than `margin`.
pub fn detect_paradox(report: &FairnessReport, margin: f64) -> Vec<Paradox> {
    let Some(graph) = report.graph() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for record in report.communities() {
        let Scope::Community(community) = record.scope else {
            continue;
        };
        for metric in [FairnessMetric::Sp, FairnessMetric::Eo] {
            if let (Some(c), Some(g)) = (record.metric_abs(metric), graph.metric_abs(metric)) {
                if c > g + margin {
                    out.push(Paradox {
                        community,
                        metric,
                        community_abs: c,
                        graph_abs: g,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 1], &all(3)).unwrap(), 1.0);
        assert_eq!(
            accuracy(&[0, 1, 1, 1], &[0, 1, 0, 1], &all(4)).unwrap(),
            0.75
        );
        assert_eq!(accuracy(&[1, 0, 1], &[0, 1, 0], &all(3)).unwrap(), 0.0);
        assert!(matches!(accuracy(&[0], &[0], &[]), Err(Error::EmptyScope)));
    }

    #[test]
    fn auc_examples() {
        let labels = [1, 1, 0, 0];
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.1], &labels, &all(4)).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &labels, &all(4)).unwrap(), 0.0);
        assert_eq!(
            auc(&[0.9, 0.8, 0.3, 0.1], &[1, 0, 1, 0], &all(4)).unwrap(),
            0.75
        );
        assert_eq!(auc(&[0.5; 4], &labels, &all(4)).unwrap(), 0.5);
        assert!(matches!(
            auc(&[0.5; 2], &[1, 1], &all(2)),
            Err(Error::SingleClassScope)
        ));
    }

    #[test]
    fn parity_examples() {
        // group 0: [1,0,1,0] → 0.5; group 1: [1,0,0,0] → 0.25
        let s = [0, 0, 0, 0, 1, 1, 1, 1];
        let pred = [1, 0, 1, 0, 1, 0, 0, 0];
        assert_eq!(
            statistical_parity(&pred, &s, &all(8)).unwrap(),
            Gap {
                signed: 0.25,
                abs: 0.25
            }
        );
        assert_eq!(
            statistical_parity(&[1, 1, 1, 1, 1, 1, 1, 1], &s, &all(8))
                .unwrap()
                .abs,
            0.0
        );
        let extreme = [0, 0, 0, 0, 1, 1, 1, 1];
        assert_eq!(
            statistical_parity(&extreme, &s, &all(8)).unwrap(),
            Gap {
                signed: -1.0,
                abs: 1.0
            }
        );
        assert!(matches!(
            statistical_parity(&pred, &[0; 8], &all(8)),
            Err(Error::MissingGroup(1))
        ));
    }

    #[test]
    fn equal_opportunity_examples() {
        let s = [0, 0, 1, 1, 1];
        let y = [1, 1, 1, 1, 0];
        let pred = [1, 1, 1, 0, 1];
        assert_eq!(
            equal_opportunity(&pred, &y, &s, &all(5)).unwrap(),
            Gap {
                signed: 0.5,
                abs: 0.5
            }
        );
        assert_eq!(
            equal_opportunity(&[1; 5], &y, &s, &all(5)).unwrap().signed,
            0.0
        );
        assert!(matches!(
            equal_opportunity(&pred, &[0, 0, 1, 1, 0], &s, &all(5)),
            Err(Error::MissingPositives(0))
        ));
    }

    #[test]
    fn single_community_matches_graph() {
        let pred = [1, 0, 1, 1, 0, 0];
        let scores = [0.9, 0.2, 0.7, 0.6, 0.4, 0.1];
        let y = [1, 0, 1, 0, 1, 0];
        let s = [0, 0, 0, 1, 1, 1];
        let r = community_report(&pred, &scores, &y, &s, &[0; 6], &all(6), Default::default());
        let g = r.graph().unwrap();
        let c = r.communities().next().unwrap();
        assert_eq!(
            ScopeRecord {
                scope: Scope::Graph,
                ..c.clone()
            },
            *g
        );
    }

    #[test]
    fn all_negative_community_has_undefined_eo() {
        let pred = [1, 0, 1, 0];
        let scores = [0.9, 0.2, 0.7, 0.6];
        let y = [1, 1, 0, 0];
        let s = [0, 1, 0, 1];
        let r = community_report(
            &pred,
            &scores,
            &y,
            &s,
            &[0, 0, 1, 1],
            &all(4),
            Default::default(),
        );
        let c1 = r
            .communities()
            .find(|r| r.scope == Scope::Community(1))
            .unwrap();
        assert_eq!(c1.eo_abs, None);
        assert_eq!(c1.auc, None);
        assert_eq!(c1.sp_abs, Some(1.0));
        assert!(r.to_csv().contains(",NA,"));
    }

    #[test]
    fn scope_serializes_as_string() {
        assert_eq!(serde_json::to_string(&Scope::Graph).unwrap(), "\"graph\"");
        assert_eq!(
            serde_json::from_str::<Scope>("\"3\"").unwrap(),
            Scope::Community(3)
        );
    }
}
