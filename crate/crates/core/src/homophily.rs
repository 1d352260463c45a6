//! Per-node label homophily: the fraction of a node's incident edges that
//! join it to a neighbor with the same label.

use crate::graph::Graph;

/// Nodes at or above this ratio are annotated as highly homophilous.
pub const HIGH_HOMOPHILY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyProfile {
    /// `None` exactly for isolated nodes.
    pub ratio: Vec<Option<f64>>,
    pub degree: Vec<usize>,
    /// Same-label neighbor counts; `ratio = same / degree`.
    pub same_label: Vec<usize>,
}

impl HomophilyProfile {
    pub fn len(&self) -> usize {
        self.ratio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratio.is_empty()
    }

    /// Mean over nodes with a defined ratio.
    pub fn mean_over(&self, nodes: impl IntoIterator<Item = usize>) -> Option<f64> {
        let (sum, count) = nodes
            .into_iter()
            .filter_map(|u| self.ratio[u])
            .fold((0.0, 0usize), |(s, c), r| (s + r, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    pub fn is_highly_homophilous(&self, u: usize) -> Option<bool> {
        self.ratio[u].map(|r| r >= HIGH_HOMOPHILY)
    }

    /// CSV with header `node_id,degree,ratio`; undefined ratios are `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,degree,ratio\n");
        for (u, (r, d)) in self.ratio.iter().zip(&self.degree).enumerate() {
            match r {
                Some(r) => out.push_str(&format!("{u},{d},{r}\n")),
                None => out.push_str(&format!("{u},{d},NA\n")),
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Option<Self> {
        let mut ratio = Vec::new();
        let mut degree = Vec::new();
        let mut same_label = Vec::new();
        for (i, line) in text.lines().skip(1).enumerate() {
            let mut parts = line.split(',');
            let u: usize = parts.next()?.parse().ok()?;
            if u != i {
                return None;
            }
            let d: usize = parts.next()?.parse().ok()?;
            let r = match parts.next()? {
                "NA" => None,
                s => Some(s.parse::<f64>().ok()?),
            };
            degree.push(d);
            same_label.push(r.map_or(0, |r| (r * d as f64).round() as usize));
            ratio.push(r);
        }
        Some(Self {
            ratio,
            degree,
            same_label,
        })
    }
}

pub fn node_homophily(graph: &Graph, u: usize) -> Option<f64> {
    let nbrs = graph.neighbors(u);
    if nbrs.is_empty() {
        return None;
    }
    let y = graph.labels()[u];
    let same = nbrs.iter().filter(|&&v| graph.labels()[v] == y).count();
    Some(same as f64 / nbrs.len() as f64)
}

/// One pass over the CSR rows.
pub fn homophily_profile(graph: &Graph) -> HomophilyProfile {
    let labels = graph.labels();
    let n = graph.num_nodes();
    let mut ratio = Vec::with_capacity(n);
    let mut degree = Vec::with_capacity(n);
    let mut same_label = Vec::with_capacity(n);
    for u in 0..n {
        let nbrs = graph.neighbors(u);
        let same = nbrs.iter().filter(|&&v| labels[v] == labels[u]).count();
        degree.push(nbrs.len());
        same_label.push(same);
        ratio.push((!nbrs.is_empty()).then(|| same as f64 / nbrs.len() as f64));
    }
    HomophilyProfile {
        ratio,
        degree,
        same_label,
    }
}
