//! Reverse-mode gradients of `task + λ·fair` through both graph convolutions.

use super::forward::{check_dims, forward_propagated, ForwardPass};
use super::loss::{fairness_grad, fairness_loss, total_loss, weighted_task_loss, PROB_FLOOR};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sparse::SparseOperator;

/// What the loss is computed over.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub labels: &'a [usize],
    /// Nodes contributing to the task loss.
    pub mask: &'a [usize],
    /// Nodes whose final embeddings enter the fairness loss.
    pub coreset: &'a [usize],
    pub lambda: f64,
    /// Per-node task-loss weights (weighted mode); `None` means all 1.
    pub weights: Option<&'a [f64]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValues {
    pub task: f64,
    pub fair: f64,
    pub total: f64,
    /// Number of label groups in the coreset with fewer than two members.
    pub undersized_groups: usize,
}

/// Evaluates the objective at `pass`.
pub fn evaluate(pass: &ForwardPass, objective: &Objective<'_>) -> Result<LossValues> {
    let task = weighted_task_loss(
        &pass.probs,
        objective.labels,
        objective.mask,
        objective.weights,
    )?;
    let coreset_labels: Vec<usize> = objective
        .coreset
        .iter()
        .map(|&u| objective.labels[u])
        .collect();
    let fair = fairness_loss(&pass.h2.select_rows(objective.coreset), &coreset_labels);
    Ok(LossValues {
        task,
        fair: fair.value,
        total: total_loss(task, fair.value, objective.lambda),
        undersized_groups: fair.undersized.len(),
    })
}

fn validate(objective: &Objective<'_>, n: usize, classes: usize) -> Result<()> {
    if objective.labels.len() != n {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: n,
            found: objective.labels.len(),
        });
    }
    if let Some(&y) = objective.labels.iter().find(|&&y| y >= classes) {
        return Err(Error::DimensionMismatch {
            what: "label class id",
            expected: classes,
            found: y,
        });
    }
    if let Some(w) = objective.weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                what: "weight count",
                expected: n,
                found: w.len(),
            });
        }
    }
    if let Some(&u) = objective
        .mask
        .iter()
        .chain(objective.coreset)
        .find(|&&u| u >= n)
    {
        return Err(Error::NodeIdOutOfRange {
            id: u,
            num_nodes: n,
        });
    }
    if objective.mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

/// Exact gradients of the objective with respect to every parameter, plus the
/// loss values at `params`.
pub fn gradients(
    params: &ModelParams,
    adj: &SparseOperator,
    x: &Matrix,
    objective: &Objective<'_>,
) -> Result<(ModelParams, LossValues)> {
    check_dims(params, adj, x.rows(), x.cols())?;
    let pass = forward_propagated(params, adj, adj.spmm(x));
    backward(params, adj, &pass, objective)
}

pub(crate) fn backward(
    params: &ModelParams,
    adj: &SparseOperator,
    pass: &ForwardPass,
    objective: &Objective<'_>,
) -> Result<(ModelParams, LossValues)> {
    let n = pass.probs.rows();
    let classes = pass.probs.cols();
    validate(objective, n, classes)?;
    let losses = evaluate(pass, objective)?;

    // d task / d logits = w_i (p_i − onehot_i) / |mask|; a floored true-class
    // probability is constant, so its term contributes nothing.
    let inv_m = 1.0 / objective.mask.len() as f64;
    let mut d_logits = Matrix::zeros(n, classes);
    for &i in objective.mask {
        let y = objective.labels[i];
        if pass.probs[(i, y)] < PROB_FLOOR {
            continue;
        }
        let w = objective.weights.map_or(1.0, |w| w[i]) * inv_m;
        let row = d_logits.row_mut(i);
        for (c, (d, &p)) in row.iter_mut().zip(pass.probs.row(i)).enumerate() {
            *d += w * (p - if c == y { 1.0 } else { 0.0 });
        }
    }

    let mut grad = ModelParams::zeros(params.dims());
    grad.wp = pass.h2.t_matmul(&d_logits);
    grad.bp = d_logits.col_sums();
    let mut d_h2 = d_logits.matmul_t(&params.wp);

    if objective.lambda != 0.0 && !objective.coreset.is_empty() {
        let emb = pass.h2.select_rows(objective.coreset);
        let labels: Vec<usize> = objective
            .coreset
            .iter()
            .map(|&u| objective.labels[u])
            .collect();
        let fair = fairness_loss(&emb, &labels);
        let d_emb = fairness_grad(&emb, &labels, &fair);
        for (row, &u) in objective.coreset.iter().enumerate() {
            for (d, g) in d_h2.row_mut(u).iter_mut().zip(d_emb.row(row)) {
                *d += objective.lambda * g;
            }
        }
    }

    let d_z2 = relu_backward(&d_h2, &pass.z2);
    grad.w2 = pass.ah1.t_matmul(&d_z2);
    grad.b2 = d_z2.col_sums();
    // Â is symmetric, so Âᵀ(dZ2 W2ᵀ) = Â(dZ2 W2ᵀ).
    let d_h1 = adj.spmm(&d_z2.matmul_t(&params.w2));
    let d_z1 = relu_backward(&d_h1, &pass.z1);
    grad.w1 = pass.ax.t_matmul(&d_z1);
    grad.b1 = d_z1.col_sums();
    Ok((grad, losses))
}

fn relu_backward(upstream: &Matrix, pre: &Matrix) -> Matrix {
    let mut out = upstream.clone();
    for (o, &z) in out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if z <= 0.0 {
            *o = 0.0;
        }
    }
    out
}
