//! File-based orchestration of the stages.
//!
//! Every stage reads its inputs from an output directory (or explicit paths
//! in [`PathsConfig`]), writes only its own artifacts, and returns a JSON
//! summary. Sidecars carry the configuration hash and global seed. Artifact
//! bytes depend only on the configuration, never on paths or wall-clock time.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::audit::{
    community_report, detect_paradox, FairnessMetric, FairnessReport, ReportMetadata,
};
use crate::community::{kmeans, KMeansConfig};
use crate::coreset::{select_coreset, Coreset, CoresetConfig, Strategy};
use crate::datagen::{generate_sbm, SbmConfig};
use crate::embed::{generate_walks, train_skipgram, SkipGramConfig, WalkConfig};
use crate::error::{Error, Result};
use crate::gnn::{self, ModelParams, TrainConfig};
use crate::graph::{self, split_nodes, Graph, NodeSplit};
use crate::homophily::{homophily_profile, HomophilyProfile};
use crate::linalg::Matrix;
use crate::rng::derive_seed;
use crate::sparse::normalized_adjacency;

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub graph: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub communities: Option<PathBuf>,
    pub homophily: Option<PathBuf>,
    pub coreset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub fractions: [f64; 3],
    pub stratify: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            fractions: [0.5, 0.25, 0.25],
            stratify: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    #[default]
    Extremal,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoresetStageConfig {
    pub total_budget: usize,
    pub strategy: StrategyName,
    pub per_community: Option<usize>,
}

impl Default for CoresetStageConfig {
    fn default() -> Self {
        Self {
            total_budget: 30,
            strategy: StrategyName::Extremal,
            per_community: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainStageConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    pub weight_decay: f64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub weighted: bool,
    /// When set, `lr` is ignored and the best of these (by validation
    /// accuracy) is kept.
    pub lr_grid: Option<Vec<f64>>,
}

impl Default for TrainStageConfig {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            lr: d.lr,
            lambda: d.lambda,
            weight_decay: d.weight_decay,
            hidden1: d.hidden1,
            hidden2: d.hidden2,
            weighted: d.weighted,
            lr_grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalScope {
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub margin: f64,
    pub scope: EvalScope,
    pub dataset_id: String,
    pub model_id: String,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            margin: 0.0,
            scope: EvalScope::Test,
            dataset_id: "dataset".into(),
            model_id: "gcn".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub total_budgets: Vec<usize>,
    pub lambdas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            total_budgets: vec![10, 20, 30, 50],
            lambdas: vec![1.0],
        }
    }
}

fn default_sbm() -> SbmConfig {
    SbmConfig {
        block_sizes: vec![200, 200],
        p_in: 0.05,
        p_out: 0.005,
        sens_alignment: 0.9,
        label_homophily: Some(vec![0.85, 0.35]),
        positive_rate: None,
        feature_dim: 16,
        feature_signal: 3.5,
    }
}

/// One JSON document with a section per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub synth: SbmConfig,
    pub split: SplitConfig,
    pub walks: WalkConfig,
    pub skipgram: SkipGramConfig,
    pub cluster: KMeansConfig,
    pub coreset: CoresetStageConfig,
    pub train: TrainStageConfig,
    pub audit: AuditConfig,
    pub sweep: SweepConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: PathsConfig::default(),
            synth: default_sbm(),
            split: SplitConfig::default(),
            walks: WalkConfig::default(),
            skipgram: SkipGramConfig::default(),
            cluster: KMeansConfig::default(),
            coreset: CoresetStageConfig::default(),
            train: TrainStageConfig::default(),
            audit: AuditConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))
    }

    /// sha256 of the configuration with all paths removed.
    pub fn config_hash(&self) -> String {
        let stripped = PipelineConfig {
            paths: PathsConfig::default(),
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&stripped).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    pub fn train_config(&self, lambda: f64) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            lr: t.lr,
            lambda,
            weight_decay: t.weight_decay,
            hidden1: t.hidden1,
            hidden2: t.hidden2,
            seed: self.stage_seed("train"),
            weighted: t.weighted,
        }
    }

    pub fn coreset_config(&self, total_budget: usize) -> CoresetConfig {
        CoresetConfig {
            total_budget,
            strategy: match self.coreset.strategy {
                StrategyName::Extremal => Strategy::Extremal,
                StrategyName::Random => Strategy::Random {
                    seed: self.stage_seed("coreset"),
                },
            },
            per_community: self.coreset.per_community,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Artifact IO

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(
        path,
    )?))?)
}

/// Sidecar path `x.json` next to `x.csv`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.iter_rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn data_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads `node_id,community_id` rows (with header) into a dense vector.
pub fn read_communities(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut out = vec![usize::MAX; n];
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| data_error(path, i + 1, "expected node_id,community_id"))
        };
        let (u, c) = (parse(it.next())?, parse(it.next())?);
        if u >= n {
            return Err(Error::NodeIdOutOfRange {
                id: u,
                num_nodes: n,
            });
        }
        out[u] = c;
    }
    if let Some(u) = out.iter().position(|&c| c == usize::MAX) {
        return Err(data_error(path, 0, format!("node {u} has no community")));
    }
    Ok(out)
}

pub fn communities_to_csv(assignment: &[usize]) -> String {
    let mut out = String::from("node_id,community_id\n");
    for (u, c) in assignment.iter().enumerate() {
        out.push_str(&format!("{u},{c}\n"));
    }
    out
}

/// Node predictions, possibly covering only part of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    pub scores: Vec<f64>,
    pub present: Vec<bool>,
}

impl Predictions {
    pub fn full(labels: Vec<usize>, scores: Vec<f64>) -> Self {
        let present = vec![true; labels.len()];
        Self {
            labels,
            scores,
            present,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,pred_label,score\n");
        for u in 0..self.labels.len() {
            if self.present[u] {
                out.push_str(&format!("{u},{},{}\n", self.labels[u], self.scores[u]));
            }
        }
        out
    }

    /// Reads `node_id,pred_label,score` rows (with header).
    pub fn read_csv(path: &Path, n: usize) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut p = Predictions {
            labels: vec![0; n],
            scores: vec![0.0; n],
            present: vec![false; n],
        };
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || data_error(path, i + 1, "expected node_id,pred_label,score");
            if cells.len() != 3 {
                return Err(bad());
            }
            let u: usize = cells[0].parse().map_err(|_| bad())?;
            if u >= n {
                return Err(Error::NodeIdOutOfRange {
                    id: u,
                    num_nodes: n,
                });
            }
            p.labels[u] = cells[1].parse().map_err(|_| bad())?;
            p.scores[u] = cells[2].parse().map_err(|_| bad())?;
            p.present[u] = true;
        }
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Stages

pub const STAGES: [&str; 8] = [
    "synth",
    "embed",
    "cluster",
    "homophily",
    "coreset",
    "train",
    "audit",
    "sweep",
];

/// The stages bound to one configuration and output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub out: PathBuf,
}

/// Per-setting result of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub total_budget: usize,
    pub lambda: f64,
    pub coreset_size: usize,
    pub acc: Option<f64>,
    pub auc: Option<f64>,
    pub sp_signed: Option<f64>,
    pub sp_abs: Option<f64>,
    pub eo_signed: Option<f64>,
    pub eo_abs: Option<f64>,
    pub worst_community_sp_abs: Option<f64>,
    pub worst_community_eo_abs: Option<f64>,
}

impl SweepRow {
    const COLUMNS: [&'static str; 11] = [
        "total_budget",
        "lambda",
        "coreset_size",
        "acc",
        "auc",
        "sp_signed",
        "sp_abs",
        "eo_signed",
        "eo_abs",
        "worst_community_sp_abs",
        "worst_community_eo_abs",
    ];

    fn metrics(&self) -> [Option<f64>; 8] {
        [
            self.acc,
            self.auc,
            self.sp_signed,
            self.sp_abs,
            self.eo_signed,
            self.eo_abs,
            self.worst_community_sp_abs,
            self.worst_community_eo_abs,
        ]
    }

    pub fn all_defined(&self) -> bool {
        self.metrics().iter().all(Option::is_some)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = SweepRow::COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![
            r.total_budget.to_string(),
            r.lambda.to_string(),
            r.coreset_size.to_string(),
        ];
        cells.extend(r.metrics().iter().map(|&m| opt(m)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Metric × setting matrix; columns are named `k{budget}_l{lambda}`.
pub fn sweep_to_plot_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("metric");
    for r in rows {
        out.push_str(&format!(",k{}_l{}", r.total_budget, r.lambda));
    }
    out.push('\n');
    for (m, name) in SweepRow::COLUMNS[3..].iter().enumerate() {
        out.push_str(name);
        for r in rows {
            out.push(',');
            out.push_str(&opt(r.metrics()[m]));
        }
        out.push('\n');
    }
    out
}

impl Pipeline {
    pub fn new(config: PipelineConfig, out: impl Into<PathBuf>) -> Self {
        Self {
            config,
            out: out.into(),
        }
    }

    fn path(&self, configured: &Option<PathBuf>, default: &str) -> PathBuf {
        configured.clone().unwrap_or_else(|| self.out.join(default))
    }

    pub fn graph_dir(&self) -> PathBuf {
        self.path(&self.config.paths.graph, "graph")
    }
    pub fn embeddings_path(&self) -> PathBuf {
        self.path(&self.config.paths.embeddings, "embeddings.csv")
    }
    pub fn communities_path(&self) -> PathBuf {
        self.path(&self.config.paths.communities, "communities.csv")
    }
    pub fn homophily_path(&self) -> PathBuf {
        self.path(&self.config.paths.homophily, "homophily.csv")
    }
    pub fn coreset_path(&self) -> PathBuf {
        self.path(&self.config.paths.coreset, "coreset.csv")
    }
    pub fn model_path(&self) -> PathBuf {
        self.path(&self.config.paths.model, "model.bin")
    }
    pub fn predictions_path(&self) -> PathBuf {
        self.path(&self.config.paths.predictions, "predictions.csv")
    }
    pub fn report_path(&self) -> PathBuf {
        self.out.join("report.json")
    }

    fn provenance(&self, stage: &str) -> Provenance {
        Provenance {
            stage: stage.into(),
            config_hash: self.config.config_hash(),
            seed: self.config.seed,
        }
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        Ok(())
    }

    pub fn load_graph(&self) -> Result<Graph> {
        Ok(graph::load_bundle(&self.graph_dir())?.0)
    }

    pub fn split(&self, graph: &Graph) -> Result<NodeSplit> {
        split_nodes(
            graph,
            self.config.split.fractions,
            self.config.stage_seed("split"),
            self.config.split.stratify,
        )
    }

    pub fn run(&self, stage: &str) -> Result<Value> {
        match stage {
            "synth" => self.synth(),
            "embed" => self.embed(),
            "cluster" => self.cluster(),
            "homophily" => self.homophily(),
            "coreset" => self.coreset(),
            "train" => self.train(),
            "audit" => self.audit(None),
            "sweep" => self.sweep(),
            other => Err(Error::ConfigInvalid(format!(
                "unknown subcommand `{other}`"
            ))),
        }
    }

    /// synth → embed → cluster → homophily → coreset → train → audit.
    pub fn run_all(&self) -> Result<Value> {
        let mut summary = serde_json::Map::new();
        for stage in &STAGES[..7] {
            summary.insert((*stage).into(), self.run(stage)?);
        }
        Ok(Value::Object(summary))
    }

    pub fn synth(&self) -> Result<Value> {
        let graph = generate_sbm(&self.config.synth, self.config.stage_seed("synth"))?;
        let dir = self.graph_dir();
        let prov = serde_json::to_value(self.provenance("synth"))?;
        graph::save_bundle(&graph, &dir, Some(prov))?;
        Ok(json!({
            "stage": "synth",
            "graph": dir,
            "nodes": graph.num_nodes(),
            "edges": graph.num_edges(),
        }))
    }

    pub fn embed(&self) -> Result<Value> {
        let graph = self.load_graph()?;
        let seed = self.config.stage_seed("embed");
        let corpus = generate_walks(&graph, &self.config.walks, seed)?;
        let trained = train_skipgram(&corpus, &self.config.skipgram, seed)?;
        self.ensure_out()?;
        let path = self.embeddings_path();
        fs::write(&path, matrix_to_csv(&trained.embeddings.matrix))?;
        let w = &self.config.walks;
        write_json(
            &sidecar(&path),
            &json!({
                "d": self.config.skipgram.dim,
                "r": w.walks_per_node,
                "l": w.walk_length,
                "p": w.p,
                "q": w.q,
                "window": self.config.skipgram.window,
                "negatives": self.config.skipgram.negatives,
                "epochs": self.config.skipgram.epochs,
                "seed": self.config.seed,
                "stage_seed": seed,
                "epoch_losses": trained.epoch_losses,
                "provenance": self.provenance("embed"),
            }),
        )?;
        Ok(json!({
            "stage": "embed",
            "embeddings": path,
            "final_loss": trained.final_loss(),
        }))
    }

    pub fn cluster(&self) -> Result<Value> {
        let path = self.embeddings_path();
        let embeddings = graph::read_features(&path)?;
        let result = kmeans(
            &embeddings,
            &self.config.cluster,
            self.config.stage_seed("cluster"),
        )?;
        self.ensure_out()?;
        let out = self.communities_path();
        fs::write(&out, communities_to_csv(&result.assignment))?;
        write_json(
            &sidecar(&out),
            &json!({
                "k": self.config.cluster.k,
                "seed": self.config.seed,
                "wcss": result.wcss,
                "iterations": result.iterations_run,
                "sizes": result.sizes(),
                "provenance": self.provenance("cluster"),
            }),
        )?;
        Ok(json!({
            "stage": "cluster",
            "communities": out,
            "wcss": result.wcss,
            "sizes": result.sizes(),
        }))
    }

    pub fn homophily(&self) -> Result<Value> {
        let graph = self.load_graph()?;
        let profile = homophily_profile(&graph);
        self.ensure_out()?;
        let out = self.homophily_path();
        fs::write(&out, profile.to_csv())?;
        let n = graph.num_nodes();
        write_json(
            &sidecar(&out),
            &json!({
                "high_homophily_threshold": crate::homophily::HIGH_HOMOPHILY,
                "provenance": self.provenance("homophily"),
            }),
        )?;
        Ok(json!({
            "stage": "homophily",
            "homophily": out,
            "mean_ratio": profile.mean_over(0..n),
        }))
    }

    fn load_profile(&self, graph: &Graph) -> Result<HomophilyProfile> {
        let path = self.homophily_path();
        let text = fs::read_to_string(&path)?;
        let profile = HomophilyProfile::from_csv(&text)
            .ok_or_else(|| data_error(&path, 0, "malformed homophily profile"))?;
        if profile.len() != graph.num_nodes() {
            return Err(Error::DimensionMismatch {
                what: "homophily profile",
                expected: graph.num_nodes(),
                found: profile.len(),
            });
        }
        Ok(profile)
    }

    pub fn coreset(&self) -> Result<Value> {
        let graph = self.load_graph()?;
        let communities = read_communities(&self.communities_path(), graph.num_nodes())?;
        let profile = self.load_profile(&graph)?;
        let split = self.split(&graph)?;
        let cfg = self.config.coreset_config(self.config.coreset.total_budget);
        let coreset = select_coreset(&graph, &communities, &profile, &split, &cfg)?;
        self.ensure_out()?;
        let out = self.coreset_path();
        fs::write(&out, coreset.to_csv())?;
        write_json(
            &sidecar(&out),
            &coreset_sidecar(&coreset, self.provenance("coreset")),
        )?;
        Ok(json!({
            "stage": "coreset",
            "coreset": out,
            "size": coreset.len(),
            "shortfall": coreset.shortfalls.iter().map(|s| s.missing()).sum::<usize>(),
        }))
    }

    fn load_coreset(&self, graph: &Graph) -> Result<Coreset> {
        let path = self.coreset_path();
        let mut coreset: Coreset = {
            let side: Value = read_json(&sidecar(&path))?;
            serde_json::from_value(side["coreset"].clone())?
        };
        // The CSV is authoritative for membership and weights.
        let text = fs::read_to_string(&path)?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let c: Vec<&str> = line.split(',').collect();
            let bad = || {
                data_error(
                    &path,
                    i + 1,
                    "expected node_id,community,sensitive,ratio,weight",
                )
            };
            if c.len() != 5 {
                return Err(bad());
            }
            let node: usize = c[0].parse().map_err(|_| bad())?;
            if node >= graph.num_nodes() {
                return Err(Error::NodeIdOutOfRange {
                    id: node,
                    num_nodes: graph.num_nodes(),
                });
            }
            entries.push(crate::coreset::CoresetEntry {
                node,
                community: c[1].parse().map_err(|_| bad())?,
                sensitive: c[2].parse().map_err(|_| bad())?,
                ratio: c[3].parse().map_err(|_| bad())?,
                weight: c[4].parse().map_err(|_| bad())?,
            });
        }
        coreset.entries = entries;
        Ok(coreset)
    }

    fn fit(
        &self,
        graph: &Graph,
        split: &NodeSplit,
        coreset: Option<&Coreset>,
        lambda: f64,
    ) -> Result<gnn::TrainOutcome> {
        let cfg = self.config.train_config(lambda);
        match &self.config.train.lr_grid {
            Some(grid) => gnn::train_lr_grid(graph, split, coreset, &cfg, grid),
            None => gnn::train(graph, split, coreset, &cfg),
        }
    }

    fn predict(graph: &Graph, params: &ModelParams) -> Result<Predictions> {
        let pass = gnn::forward(params, &normalized_adjacency(graph), graph.features())?;
        let (labels, scores) = gnn::predictions(&pass);
        Ok(Predictions::full(labels, scores))
    }

    pub fn train(&self) -> Result<Value> {
        let graph = self.load_graph()?;
        let split = self.split(&graph)?;
        let lambda = self.config.train.lambda;
        let coreset = if lambda > 0.0 {
            Some(self.load_coreset(&graph)?)
        } else {
            self.load_coreset(&graph).ok()
        };
        let outcome = self.fit(&graph, &split, coreset.as_ref(), lambda)?;
        let predictions = Self::predict(&graph, &outcome.params)?;
        self.ensure_out()?;
        let model = self.model_path();
        let mut w = BufWriter::new(fs::File::create(&model)?);
        outcome.params.write_bundle(self.config.seed, &mut w)?;
        w.flush()?;
        fs::write(self.out.join("history.csv"), outcome.history.to_csv())?;
        fs::write(self.predictions_path(), predictions.to_csv())?;
        write_json(
            &self.out.join("train.json"),
            &json!({
                "lambda": lambda,
                "lr": outcome.lr,
                "epochs": self.config.train.epochs,
                "best_epoch": outcome.best_epoch,
                "best_val_acc": outcome.best_val_acc,
                "coreset_size": coreset.as_ref().map_or(0, Coreset::len),
                "provenance": self.provenance("train"),
            }),
        )?;
        Ok(json!({
            "stage": "train",
            "model": model,
            "predictions": self.predictions_path(),
            "best_val_acc": outcome.best_val_acc,
            "lr": outcome.lr,
        }))
    }

    fn evaluation_nodes(&self, graph: &Graph, predictions: &Predictions) -> Result<Vec<usize>> {
        let base: Vec<usize> = match self.config.audit.scope {
            EvalScope::Test => self.split(graph)?.test,
            EvalScope::All => (0..graph.num_nodes()).collect(),
        };
        let nodes: Vec<usize> = base
            .into_iter()
            .filter(|&u| predictions.present[u])
            .collect();
        if nodes.is_empty() {
            return Err(Error::EmptyScope);
        }
        Ok(nodes)
    }

    pub fn report(
        &self,
        graph: &Graph,
        communities: &[usize],
        predictions: &Predictions,
    ) -> Result<FairnessReport> {
        let nodes = self.evaluation_nodes(graph, predictions)?;
        Ok(community_report(
            &predictions.labels,
            &predictions.scores,
            graph.labels(),
            graph.sensitive(),
            communities,
            &nodes,
            ReportMetadata {
                model_id: self.config.audit.model_id.clone(),
                dataset_id: self.config.audit.dataset_id.clone(),
                num_communities: 0,
            },
        ))
    }

    /// Audits `predictions_path` (or the configured/default predictions file).
    ///
    /// Without a communities artifact at the default location the report
    /// holds the graph scope only.
    pub fn audit(&self, predictions_path: Option<&Path>) -> Result<Value> {
        let graph = self.load_graph()?;
        let communities_path = self.communities_path();
        let graph_only = self.config.paths.communities.is_none() && !communities_path.exists();
        let communities = if graph_only {
            vec![0; graph.num_nodes()]
        } else {
            read_communities(&communities_path, graph.num_nodes())?
        };
        let pred_path = predictions_path.map_or_else(|| self.predictions_path(), Path::to_path_buf);
        let predictions = Predictions::read_csv(&pred_path, graph.num_nodes())?;
        let mut report = self.report(&graph, &communities, &predictions)?;
        if graph_only {
            report.scopes.truncate(1);
            report.metadata.num_communities = 0;
        }
        let paradoxes = detect_paradox(&report, self.config.audit.margin);
        self.ensure_out()?;
        write_json(&self.report_path(), &report)?;
        fs::write(self.out.join("report.csv"), report.to_csv())?;
        fs::write(self.out.join("plot_data.csv"), report.to_plot_csv())?;
        write_json(
            &self.out.join("audit.json"),
            &json!({
                "margin": self.config.audit.margin,
                "scope": self.config.audit.scope,
                "paradoxes": paradoxes,
                "provenance": self.provenance("audit"),
            }),
        )?;
        let g = report.graph().expect("graph scope always present");
        Ok(json!({
            "stage": "audit",
            "report": self.report_path(),
            "acc": g.acc,
            "auc": g.auc,
            "sp_abs": g.sp_abs,
            "eo_abs": g.eo_abs,
            "worst_community_eo_abs": report.worst_community(FairnessMetric::Eo),
            "paradoxes": paradoxes.len(),
        }))
    }

    /// Retrains per (budget, λ) setting and audits each run in memory.
    pub fn sweep_rows(&self) -> Result<Vec<SweepRow>> {
        let graph = self.load_graph()?;
        let communities = read_communities(&self.communities_path(), graph.num_nodes())?;
        let profile = homophily_profile(&graph);
        let split = self.split(&graph)?;
        let mut rows = Vec::new();
        for &budget in &self.config.sweep.total_budgets {
            let coreset = select_coreset(
                &graph,
                &communities,
                &profile,
                &split,
                &self.config.coreset_config(budget),
            )?;
            for &lambda in &self.config.sweep.lambdas {
                let outcome = self.fit(&graph, &split, Some(&coreset), lambda)?;
                let predictions = Self::predict(&graph, &outcome.params)?;
                let report = self.report(&graph, &communities, &predictions)?;
                let g = report.graph().expect("graph scope");
                rows.push(SweepRow {
                    total_budget: budget,
                    lambda,
                    coreset_size: coreset.len(),
                    acc: g.acc,
                    auc: g.auc,
                    sp_signed: g.sp_signed,
                    sp_abs: g.sp_abs,
                    eo_signed: g.eo_signed,
                    eo_abs: g.eo_abs,
                    worst_community_sp_abs: report.worst_community(FairnessMetric::Sp),
                    worst_community_eo_abs: report.worst_community(FairnessMetric::Eo),
                });
            }
        }
        Ok(rows)
    }

    pub fn sweep(&self) -> Result<Value> {
        let rows = self.sweep_rows()?;
        self.ensure_out()?;
        let csv = self.out.join("sweep.csv");
        let plot = self.out.join("sweep_plot.csv");
        fs::write(&csv, sweep_to_csv(&rows))?;
        fs::write(&plot, sweep_to_plot_csv(&rows))?;
        write_json(
            &sidecar(&csv),
            &json!({
                "sweep": self.config.sweep,
                "rows": rows,
                "provenance": self.provenance("sweep"),
            }),
        )?;
        Ok(json!({
            "stage": "sweep",
            "sweep": csv,
            "plot_data": plot,
            "rows": rows.len(),
        }))
    }
}

fn coreset_sidecar(coreset: &Coreset, provenance: Provenance) -> Value {
    let without_entries = Coreset {
        entries: Vec::new(),
        ..coreset.clone()
    };
    json!({
        "k_total": coreset.total_budget,
        "strategy": coreset.strategy.to_string(),
        "shortfalls": coreset.shortfalls,
        "coreset": without_entries,
        "provenance": provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_ignores_paths() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.graph = Some("/elsewhere".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn config_sections_default() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"seed": 3, "cluster": {"k": 2}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.cluster.k, 2);
        assert_eq!(cfg.cluster.max_iter, KMeansConfig::default().max_iter);
        assert_eq!(cfg.coreset.total_budget, 30);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn sweep_csv_shape() {
        let row = SweepRow {
            total_budget: 10,
            lambda: 1.0,
            coreset_size: 8,
            acc: Some(0.9),
            auc: Some(0.95),
            sp_signed: Some(-0.1),
            sp_abs: Some(0.1),
            eo_signed: Some(0.05),
            eo_abs: Some(0.05),
            worst_community_sp_abs: Some(0.2),
            worst_community_eo_abs: None,
        };
        let csv = sweep_to_csv(&[row.clone(), row.clone()]);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.ends_with(",NA\n"));
        assert!(!row.all_defined());
        let plot = sweep_to_plot_csv(&[row]);
        assert_eq!(plot.lines().next(), Some("metric,k10_l1"));
        assert_eq!(plot.lines().count(), 9);
    }
}
