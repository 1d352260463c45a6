//! Community detection: k-means (k-means++ seeding, Lloyd iterations) over
//! structural embeddings, minimizing the within-cluster sum of squared
//! Euclidean distances.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    pub wcss: f64,
    pub iterations_run: usize,
    /// WCSS after every centroid update; non-increasing.
    pub wcss_trace: Vec<f64>,
}

impl CommunityAssignment {
    pub fn num_communities(&self) -> usize {
        self.centroids.rows()
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == community)
            .map(|(u, _)| u)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_communities()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 5,
            max_iter: 300,
            tol: 1e-8,
        }
    }
}

fn plus_plus_init(points: &Matrix, k: usize, rng: &mut Rng) -> Matrix {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut best: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in best.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    target -= w;
                    if target < 0.0 {
                        break;
                    }
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Every remaining point coincides with a centroid.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(squared_distance(points.row(i), points.row(next)));
        }
    }
    points.select_rows(&chosen)
}

/// Nearest centroid per point; ties go to the lower centroid index.
fn assign(points: &Matrix, centroids: &Matrix) -> Vec<usize> {
    points
        .iter_rows()
        .map(|x| {
            let mut best = (f64::INFINITY, 0);
            for (c, mu) in centroids.iter_rows().enumerate() {
                let d = squared_distance(x, mu);
                if d < best.0 {
                    best = (d, c);
                }
            }
            best.1
        })
        .collect()
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster that can spare it.
fn repair_empty(points: &Matrix, centroids: &mut Matrix, assignment: &mut [usize]) {
    let k = centroids.rows();
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = (-1.0, usize::MAX);
        for (i, &c) in assignment.iter().enumerate() {
            if sizes[c] < 2 {
                continue;
            }
            let d = squared_distance(points.row(i), centroids.row(c));
            if d > far.0 {
                far = (d, i);
            }
        }
        let i = far.1;
        sizes[assignment[i]] -= 1;
        sizes[empty] += 1;
        assignment[i] = empty;
        centroids.row_mut(empty).copy_from_slice(points.row(i));
    }
}

fn means(points: &Matrix, assignment: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (x, &c) in points.iter_rows().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums.row_mut(c).iter_mut().zip(x) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        let inv = 1.0 / count as f64;
        sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
    }
    sums
}

fn cost(points: &Matrix, centroids: &Matrix, assignment: &[usize]) -> f64 {
    points
        .iter_rows()
        .zip(assignment)
        .map(|(x, &c)| squared_distance(x, centroids.row(c)))
        .sum()
}

/// Within-cluster sum of squares with each centroid taken as its cluster mean.
pub fn wcss(points: &Matrix, assignment: &[usize]) -> f64 {
    assert_eq!(points.rows(), assignment.len(), "assignment length");
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    cost(points, &means(points, assignment, k), assignment)
}

/// Stops when the largest centroid shift drops below `tol`, when no point
/// changes cluster, or after `max_iter` updates. Returned centroids are the
/// means of the returned assignment.
pub fn kmeans(points: &Matrix, config: &KMeansConfig, seed: u64) -> Result<CommunityAssignment> {
    let n = points.rows();
    let k = config.k;
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if !(config.tol >= 0.0) {
        return Err(Error::ConfigInvalid("tol must be non-negative".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignment = assign(points, &centroids);
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations_run = 0;
    for it in 1..=config.max_iter.max(1) {
        repair_empty(points, &mut centroids, &mut assignment);
        let updated = means(points, &assignment, k);
        let shift = updated
            .iter_rows()
            .zip(centroids.iter_rows())
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        let w = cost(points, &centroids, &assignment);
        if let Some(&last) = trace.last() {
            debug_assert!(
                w <= last + 1e-9 * last.abs().max(1.0),
                "wcss increased from {last} to {w}"
            );
        }
        trace.push(w);
        iterations_run = it;
        if shift < config.tol || it == config.max_iter {
            break;
        }
        let next = assign(points, &centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(CommunityAssignment {
        assignment,
        centroids,
        wcss: *trace.last().expect("at least one iteration"),
        iterations_run,
        wcss_trace: trace,
    })
}
