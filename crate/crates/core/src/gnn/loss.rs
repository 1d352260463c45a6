//! Training objective: cross-entropy on labeled nodes plus a similarity
//! parity penalty on coreset embeddings.

use crate::error::{Error, Result};
use crate::linalg::{cosine, dot, norm, Matrix};

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Mean negative log-likelihood of the true class over `mask`.
pub fn task_loss(probs: &Matrix, labels: &[usize], mask: &[usize]) -> Result<f64> {
    weighted_task_loss(probs, labels, mask, None)
}

/// As [`task_loss`], with per-node weights multiplying each term. The
/// normalizer stays `|mask|`.
pub fn weighted_task_loss(
    probs: &Matrix,
    labels: &[usize],
    mask: &[usize],
    weights: Option<&[f64]>,
) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let total: f64 = mask
        .iter()
        .map(|&i| {
            let w = weights.map_or(1.0, |w| w[i]);
            -w * probs[(i, labels[i])].max(PROB_FLOOR).ln()
        })
        .sum();
    Ok(total / mask.len() as f64)
}

pub fn total_loss(task: f64, fair: f64, lambda: f64) -> f64 {
    task + lambda * fair
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessLoss {
    pub value: f64,
    /// Mean pairwise cosine similarity within label 0 and label 1.
    pub group_similarity: [f64; 2],
    /// Labels whose coreset group has fewer than two members.
    pub undersized: Vec<usize>,
}

/// Mean cosine similarity over unordered pairs of distinct rows.
fn mean_pairwise_cosine(rows: &[&[f64]]) -> f64 {
    let m = rows.len();
    if m < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            total += cosine(rows[i], rows[j]);
        }
    }
    2.0 * total / (m * (m - 1)) as f64
}

/// `|avg_sim(label 0) − avg_sim(label 1)|` over coreset embeddings.
///
/// `embeddings` holds one row per coreset member, aligned with `labels`.
/// Members with labels other than 0 or 1 are ignored. A group with fewer
/// than two members contributes 0 and is reported in `undersized`.
pub fn fairness_loss(embeddings: &Matrix, labels: &[usize]) -> FairnessLoss {
    assert_eq!(embeddings.rows(), labels.len(), "one label per embedding");
    let mut group_similarity = [0.0; 2];
    let mut undersized = Vec::new();
    for (g, sim) in group_similarity.iter_mut().enumerate() {
        let rows: Vec<&[f64]> = (0..labels.len())
            .filter(|&i| labels[i] == g)
            .map(|i| embeddings.row(i))
            .collect();
        if rows.len() < 2 {
            undersized.push(g);
        }
        *sim = mean_pairwise_cosine(&rows);
    }
    FairnessLoss {
        value: (group_similarity[0] - group_similarity[1]).abs(),
        group_similarity,
        undersized,
    }
}

/// `∂ cos(a, b) / ∂a`, zero when either vector is zero.
pub(crate) fn cosine_grad(a: &[f64], b: &[f64], out: &mut [f64], scale: f64) {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return;
    }
    let c = dot(a, b) / (na * nb);
    let inv = 1.0 / (na * nb);
    let ca = c / (na * na);
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o += scale * (y * inv - ca * x);
    }
}

/// Gradient of [`fairness_loss`] with respect to each embedding row.
pub(crate) fn fairness_grad(embeddings: &Matrix, labels: &[usize], loss: &FairnessLoss) -> Matrix {
    let mut grad = Matrix::zeros(embeddings.rows(), embeddings.cols());
    let diff = loss.group_similarity[0] - loss.group_similarity[1];
    let sign = if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    };
    if sign == 0.0 {
        return grad;
    }
    for g in 0..2usize {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == g).collect();
        let m = members.len();
        if m < 2 {
            continue;
        }
        let group_sign = if g == 0 { sign } else { -sign };
        let scale = group_sign * 2.0 / (m * (m - 1)) as f64;
        for &i in &members {
            for &j in &members {
                if i != j {
                    let (a, b) = (embeddings.row(i), embeddings.row(j));
                    cosine_grad(a, b, grad.row_mut(i), scale);
                }
            }
        }
    }
    grad
}
