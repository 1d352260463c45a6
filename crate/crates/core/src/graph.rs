//! Undirected attributed graphs in CSR form, their on-disk formats, and
//! train/validation/test splits.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// An immutable undirected graph with node features, class labels and a
/// binary sensitive attribute.
///
/// Adjacency is stored symmetrically: each undirected edge appears in both
/// endpoint rows, neighbor lists are strictly increasing and self-loops are
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Matrix,
    labels: Vec<usize>,
    sensitive: Vec<u8>,
    num_classes: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Duplicate and reversed
    /// pairs collapse to one edge; self-loops are rejected.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: Matrix,
        labels: Vec<usize>,
        sensitive: Vec<u8>,
    ) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (line, &(u, v)) in edges.iter().enumerate() {
            for id in [u, v] {
                if id >= num_nodes {
                    return Err(Error::NodeIdOutOfRange { id, num_nodes });
                }
            }
            if u == v {
                return Err(Error::SelfLoop {
                    node: u,
                    line: line + 1,
                });
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut row in adj {
            row.sort_unstable();
            row.dedup();
            neighbors.extend(row);
            offsets.push(neighbors.len());
        }
        Self::from_csr(offsets, neighbors, features, labels, sensitive)
    }

    fn from_csr(
        offsets: Vec<usize>,
        neighbors: Vec<usize>,
        features: Matrix,
        labels: Vec<usize>,
        sensitive: Vec<u8>,
    ) -> Result<Self> {
        let n = offsets.len() - 1;
        if features.rows() != n {
            return Err(Error::DimensionMismatch {
                what: "feature rows",
                expected: n,
                found: features.rows(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: n,
                found: labels.len(),
            });
        }
        if sensitive.len() != n {
            return Err(Error::DimensionMismatch {
                what: "sensitive count",
                expected: n,
                found: sensitive.len(),
            });
        }
        if let Some((node, &s)) = sensitive.iter().enumerate().find(|(_, &s)| s > 1) {
            return Err(Error::NonBinarySensitive {
                node,
                value: s as i64,
            });
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            offsets,
            neighbors,
            features,
            labels,
            sensitive,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    /// Same structure and attributes with a different label vector.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::from_csr(
            self.offsets.clone(),
            self.neighbors.clone(),
            self.features.clone(),
            labels,
            self.sensitive.clone(),
        )
    }

    /// Same structure and labels with a different sensitive vector.
    pub fn with_sensitive(&self, sensitive: Vec<u8>) -> Result<Self> {
        Self::from_csr(
            self.offsets.clone(),
            self.neighbors.clone(),
            self.features.clone(),
            self.labels.clone(),
            sensitive,
        )
    }
}

// ---------------------------------------------------------------------------
// Text formats

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads `u<TAB>v` lines; `#` lines and blank lines are skipped.
pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed(
                path,
                i + 1,
                "expected two tab-separated node ids",
            ));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| malformed(path, i + 1, e.to_string()))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}

pub fn read_features(path: &Path) -> Result<Matrix> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| malformed(path, i + 1, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(malformed(
                    path,
                    i + 1,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    Ok(Matrix::from_rows(&rows))
}

fn read_integers(path: &Path) -> Result<Vec<i64>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse::<i64>()
                .map_err(|e| malformed(path, i + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

/// Loads a graph from its four text files. The node count is taken from the
/// labels file; every other file must agree with it.
pub fn load_graph(
    edges_path: &Path,
    features_path: &Path,
    labels_path: &Path,
    sensitive_path: &Path,
) -> Result<Graph> {
    let labels = read_integers(labels_path)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            usize::try_from(v).map_err(|_| malformed(labels_path, i + 1, "negative label"))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = labels.len();
    let sensitive = read_integers(sensitive_path)?
        .into_iter()
        .enumerate()
        .map(|(node, value)| match value {
            0 | 1 => Ok(value as u8),
            _ => Err(Error::NonBinarySensitive { node, value }),
        })
        .collect::<Result<Vec<_>>>()?;
    let features = read_features(features_path)?;
    let edges = read_edges(edges_path)?;
    Graph::from_edges(n, &edges, features, labels, sensitive)
}

const EDGES_FILE: &str = "edges.tsv";
const FEATURES_FILE: &str = "features.csv";
const LABELS_FILE: &str = "labels.txt";
const SENSITIVE_FILE: &str = "sensitive.txt";
const MANIFEST_FILE: &str = "manifest.json";

/// `manifest.json` of a graph bundle directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub n: usize,
    pub k: usize,
    pub num_classes: usize,
    pub num_edges: usize,
    /// sha256 hex digest per file name.
    pub checksums: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn render_graph_files(graph: &Graph) -> [(&'static str, String); 4] {
    use std::fmt::Write as _;
    let mut edges = String::new();
    for (u, v) in graph.edges() {
        let _ = writeln!(edges, "{u}\t{v}");
    }
    let mut features = String::new();
    for row in graph.features().iter_rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(features, "{}", cells.join(","));
    }
    let mut labels = String::new();
    for y in graph.labels() {
        let _ = writeln!(labels, "{y}");
    }
    let mut sensitive = String::new();
    for s in graph.sensitive() {
        let _ = writeln!(sensitive, "{s}");
    }
    [
        (EDGES_FILE, edges),
        (FEATURES_FILE, features),
        (LABELS_FILE, labels),
        (SENSITIVE_FILE, sensitive),
    ]
}

/// Writes a bundle directory: the four text files plus `manifest.json`.
/// Output bytes depend only on the graph and `provenance`.
pub fn save_bundle(
    graph: &Graph,
    dir: &Path,
    provenance: Option<serde_json::Value>,
) -> Result<BundleManifest> {
    fs::create_dir_all(dir)?;
    let mut checksums = BTreeMap::new();
    for (name, body) in render_graph_files(graph) {
        fs::write(dir.join(name), body.as_bytes())?;
        checksums.insert(name.to_string(), sha256_hex(body.as_bytes()));
    }
    let manifest = BundleManifest {
        n: graph.num_nodes(),
        k: graph.feature_dim(),
        num_classes: graph.num_classes(),
        num_edges: graph.num_edges(),
        checksums,
        provenance,
    };
    let mut w = BufWriter::new(fs::File::create(dir.join(MANIFEST_FILE))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    Ok(manifest)
}

/// Loads a bundle directory, verifying checksums and manifest counts.
pub fn load_bundle(dir: &Path) -> Result<(Graph, BundleManifest)> {
    let manifest: BundleManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
    for (name, expected) in &manifest.checksums {
        let bytes = fs::read(dir.join(name))?;
        if &sha256_hex(&bytes) != expected {
            return Err(Error::ChecksumMismatch { file: name.clone() });
        }
    }
    let path = |f: &str| -> PathBuf { dir.join(f) };
    let graph = load_graph(
        &path(EDGES_FILE),
        &path(FEATURES_FILE),
        &path(LABELS_FILE),
        &path(SENSITIVE_FILE),
    )?;
    if graph.num_nodes() != manifest.n {
        return Err(Error::DimensionMismatch {
            what: "manifest node count",
            expected: manifest.n,
            found: graph.num_nodes(),
        });
    }
    if graph.feature_dim() != manifest.k {
        return Err(Error::DimensionMismatch {
            what: "manifest feature dim",
            expected: manifest.k,
            found: graph.feature_dim(),
        });
    }
    Ok((graph, manifest))
}

/// Compacts arbitrary integer node ids in an edge list to `0..n-1`, in order
/// of first appearance. Returns the remapped edges and the original ids.
pub fn compact_node_ids(edges: &[(u64, u64)]) -> (Vec<(usize, usize)>, Vec<u64>) {
    let mut index = std::collections::HashMap::new();
    let mut originals = Vec::new();
    let mut id = |raw: u64| {
        *index.entry(raw).or_insert_with(|| {
            originals.push(raw);
            originals.len() - 1
        })
    };
    let remapped = edges.iter().map(|&(u, v)| (id(u), id(v))).collect();
    (remapped, originals)
}

// ---------------------------------------------------------------------------
// Splits

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeSplit {
    /// Membership mask over `n` nodes for the training set.
    pub fn train_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.train {
            mask[i] = true;
        }
        mask
    }
}

fn cut_sizes(count: usize, fractions: [f64; 3]) -> (usize, usize) {
    let train = ((count as f64) * fractions[0]).round() as usize;
    let train = train.min(count);
    let val = (((count as f64) * fractions[1]).round() as usize).min(count - train);
    (train, val)
}

/// Random train/val/test split. Index sets are returned sorted.
///
/// In stratified mode each class is split separately, so per-class
/// proportions are preserved up to rounding.
pub fn split_nodes(
    graph: &Graph,
    fractions: [f64; 3],
    seed: u64,
    stratify_by_label: bool,
) -> Result<NodeSplit> {
    if fractions.iter().any(|&f| !(f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::FractionSumInvalid(fractions));
    }
    let mut rng = rng::seeded(seed);
    let mut split = NodeSplit {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    let mut assign = |mut members: Vec<usize>, rng: &mut rng::Rng| {
        members.shuffle(rng);
        let (train, val) = cut_sizes(members.len(), fractions);
        split.train.extend_from_slice(&members[..train]);
        split.val.extend_from_slice(&members[train..train + val]);
        split.test.extend_from_slice(&members[train + val..]);
    };
    if stratify_by_label {
        for class in 0..graph.num_classes() {
            let members: Vec<usize> = (0..graph.num_nodes())
                .filter(|&u| graph.labels()[u] == class)
                .collect();
            if members.is_empty() {
                continue;
            }
            if members.len() < 3 {
                return Err(Error::ClassTooSmall {
                    class,
                    count: members.len(),
                });
            }
            assign(members, &mut rng);
        }
    } else {
        assign((0..graph.num_nodes()).collect(), &mut rng);
    }
    for (name, set) in [
        ("train", &mut split.train),
        ("val", &mut split.val),
        ("test", &mut split.test),
    ] {
        if set.is_empty() {
            return Err(Error::EmptySplit(name));
        }
        set.sort_unstable();
    }
    Ok(split)
}
