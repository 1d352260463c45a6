use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sparse::SparseOperator;

/// Every intermediate of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `Â X`
    pub ax: Matrix,
    pub z1: Matrix,
    pub h1: Matrix,
    /// `Â H1`
    pub ah1: Matrix,
    pub z2: Matrix,
    /// Final-layer node embeddings.
    pub h2: Matrix,
    pub logits: Matrix,
    pub probs: Matrix,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

pub(crate) fn check_dims(
    params: &ModelParams,
    adj: &SparseOperator,
    rows: usize,
    cols: usize,
) -> Result<()> {
    let dims = params.dims();
    let checks = [
        ("operator size", adj.n(), rows),
        ("feature dim", dims.in_dim, cols),
        ("b1 length", dims.hidden1, params.b1.len()),
        ("w2 rows", dims.hidden1, params.w2.rows()),
        ("b2 length", dims.hidden2, params.b2.len()),
        ("wp rows", dims.hidden2, params.wp.rows()),
        ("bp length", dims.num_classes, params.bp.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            });
        }
    }
    Ok(())
}

/// `H1 = relu(Â X W1 + b1)`, `H2 = relu(Â H1 W2 + b2)`,
/// `logits = H2 Wp + bp`, `probs = softmax(logits)`.
pub fn forward(params: &ModelParams, adj: &SparseOperator, x: &Matrix) -> Result<ForwardPass> {
    check_dims(params, adj, x.rows(), x.cols())?;
    Ok(forward_propagated(params, adj, adj.spmm(x)))
}

/// Forward pass from a precomputed `Â X`, which is constant during training.
pub(crate) fn forward_propagated(
    params: &ModelParams,
    adj: &SparseOperator,
    ax: Matrix,
) -> ForwardPass {
    let mut z1 = ax.matmul(&params.w1);
    z1.add_row_broadcast(&params.b1);
    let h1 = z1.map(relu);
    let ah1 = adj.spmm(&h1);
    let mut z2 = ah1.matmul(&params.w2);
    z2.add_row_broadcast(&params.b2);
    let h2 = z2.map(relu);
    let mut logits = h2.matmul(&params.wp);
    logits.add_row_broadcast(&params.bp);
    let probs = softmax_rows(&logits);
    ForwardPass {
        ax,
        z1,
        h1,
        ah1,
        z2,
        h2,
        logits,
        probs,
    }
}

/// Arg-max class per node (ties to the lower class) and the class-1
/// probability as a ranking score.
pub fn predictions(pass: &ForwardPass) -> (Vec<usize>, Vec<f64>) {
    let probs = &pass.probs;
    let labels = probs
        .iter_rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &p)| {
                    if p > best.1 {
                        (c, p)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect();
    let scores = probs
        .iter_rows()
        .map(|row| row.get(1).copied().unwrap_or(0.0))
        .collect();
    (labels, scores)
}
