use serde::{Deserialize, Serialize};

use super::backward::{backward, Objective};
use super::forward::{forward_propagated, predictions};
use super::params::{ModelDims, ModelParams};
use crate::coreset::Coreset;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSplit};
use crate::sparse::{normalized_adjacency, SparseOperator};

/// Learning rates searched by [`train_lr_grid`].
pub const LR_GRID: [f64; 3] = [0.1, 0.01, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    /// L2 penalty on weight matrices (biases are not decayed).
    pub weight_decay: f64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub seed: u64,
    /// Multiply task-loss terms of coreset nodes by their coreset weight.
    pub weighted: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            lr: 0.01,
            lambda: 1.0,
            weight_decay: 5e-4,
            hidden1: 64,
            hidden2: 64,
            seed: 0,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub task_loss: f64,
    pub fair_loss: f64,
    pub total_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,task_loss,fair_loss,total_loss,train_acc,val_acc\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.epoch, r.task_loss, r.fair_loss, r.total_loss, r.train_acc, r.val_acc
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy.
    pub params: ModelParams,
    pub history: TrainHistory,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub lr: f64,
}

fn fraction_correct(pred: &[usize], labels: &[usize], nodes: &[usize]) -> f64 {
    let hits = nodes.iter().filter(|&&u| pred[u] == labels[u]).count();
    hits as f64 / nodes.len() as f64
}

/// Full-batch gradient descent. Each history row is measured at the
/// parameters before that epoch's update.
pub fn train(
    graph: &Graph,
    split: &NodeSplit,
    coreset: Option<&Coreset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_operator(graph, &normalized_adjacency(graph), split, coreset, config)
}

pub fn train_with_operator(
    graph: &Graph,
    adj: &SparseOperator,
    split: &NodeSplit,
    coreset: Option<&Coreset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if config.epochs == 0 || !(config.lr > 0.0) {
        return Err(Error::ConfigInvalid(
            "epochs ≥ 1 and lr > 0 required".into(),
        ));
    }
    if !(config.lambda >= 0.0) || !(config.weight_decay >= 0.0) {
        return Err(Error::ConfigInvalid(
            "lambda and weight_decay must be ≥ 0".into(),
        ));
    }
    if split.train.is_empty() {
        return Err(Error::EmptyTrainingSplit);
    }
    let coreset_nodes = coreset.map(Coreset::nodes).unwrap_or_default();
    let train_mask = split.train_mask(graph.num_nodes());
    if let Some(&u) = coreset_nodes.iter().find(|&&u| !train_mask[u]) {
        return Err(Error::ConfigInvalid(format!(
            "coreset node {u} is not in the training split"
        )));
    }
    let weights = match (config.weighted, coreset) {
        (true, Some(cs)) => {
            let mut w = vec![1.0; graph.num_nodes()];
            for e in &cs.entries {
                w[e.node] = e.weight;
            }
            Some(w)
        }
        _ => None,
    };
    let objective = Objective {
        labels: graph.labels(),
        mask: &split.train,
        coreset: &coreset_nodes,
        lambda: config.lambda,
        weights: weights.as_deref(),
    };

    let dims = ModelDims {
        in_dim: graph.feature_dim(),
        hidden1: config.hidden1,
        hidden2: config.hidden2,
        num_classes: graph.num_classes().max(2),
    };
    let mut params = ModelParams::init(dims, config.seed);
    let ax = adj.spmm(graph.features());
    let mut history = TrainHistory::default();
    let mut best = (params.clone(), 0usize, f64::NEG_INFINITY);

    for epoch in 0..config.epochs {
        let pass = forward_propagated(&params, adj, ax.clone());
        let (mut grad, losses) = backward(&params, adj, &pass, &objective)?;
        let (pred, _) = predictions(&pass);
        let train_acc = fraction_correct(&pred, graph.labels(), &split.train);
        let val_acc = if split.val.is_empty() {
            train_acc
        } else {
            fraction_correct(&pred, graph.labels(), &split.val)
        };
        history.records.push(EpochRecord {
            epoch,
            task_loss: losses.task,
            fair_loss: losses.fair,
            total_loss: losses.total,
            train_acc,
            val_acc,
        });
        if val_acc > best.2 {
            best = (params.clone(), epoch, val_acc);
        }
        if config.weight_decay > 0.0 {
            grad.w1.add_scaled(&params.w1, config.weight_decay);
            grad.w2.add_scaled(&params.w2, config.weight_decay);
            grad.wp.add_scaled(&params.wp, config.weight_decay);
        }
        params.axpy(-config.lr, &grad);
        if !params.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "training diverged at epoch {epoch} (lr {})",
                config.lr
            )));
        }
    }
    Ok(TrainOutcome {
        params: best.0,
        history,
        best_epoch: best.1,
        best_val_acc: best.2,
        lr: config.lr,
    })
}

/// Trains once per learning rate in `grid` and keeps the run with the best
/// validation accuracy (earlier grid entries win ties). Diverged runs are
/// skipped.
pub fn train_lr_grid(
    graph: &Graph,
    split: &NodeSplit,
    coreset: Option<&Coreset>,
    config: &TrainConfig,
    grid: &[f64],
) -> Result<TrainOutcome> {
    let adj = normalized_adjacency(graph);
    let mut best: Option<TrainOutcome> = None;
    let mut last_err = None;
    for &lr in grid {
        let cfg = TrainConfig { lr, ..*config };
        match train_with_operator(graph, &adj, split, coreset, &cfg) {
            Ok(run) => {
                if best
                    .as_ref()
                    .is_none_or(|b| run.best_val_acc > b.best_val_acc)
                {
                    best = Some(run);
                }
            }
            Err(e @ Error::ConfigInvalid(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::ConfigInvalid("empty learning-rate grid".into())))
}
