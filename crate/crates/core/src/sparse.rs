//! The renormalized GCN propagation operator `D̃^{-1/2} (A + I) D̃^{-1/2}`.

use crate::graph::Graph;
use crate::linalg::Matrix;

/// Square CSR matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.offsets[i]..self.offsets[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `self · dense`, accumulated row by row in column order.
    pub fn spmm(&self, dense: &Matrix) -> Matrix {
        assert_eq!(dense.rows(), self.n, "spmm dimension");
        let mut out = Matrix::zeros(self.n, dense.cols());
        for i in 0..self.n {
            let out_row = out.row_mut(i);
            for (j, a) in self.row(i) {
                for (o, &x) in out_row.iter_mut().zip(dense.row(j)) {
                    *o += a * x;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// Applies a symmetric node permutation: `out[perm[i], perm[j]] = self[i, j]`.
    pub fn permuted(&self, perm: &[usize]) -> SparseOperator {
        let mut inverse = vec![0; self.n];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let mut offsets = vec![0];
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for new_i in 0..self.n {
            let old_i = inverse[new_i];
            let mut row: Vec<(usize, f64)> = self.row(old_i).map(|(j, v)| (perm[j], v)).collect();
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                indices.push(j);
                values.push(v);
            }
            offsets.push(indices.len());
        }
        SparseOperator {
            n: self.n,
            offsets,
            indices,
            values,
        }
    }
}

/// Entry `(u, v)` is `1 / sqrt((deg u + 1)(deg v + 1))` on every edge and on
/// the diagonal. An isolated node maps to itself with weight 1.
pub fn normalized_adjacency(graph: &Graph) -> SparseOperator {
    let n = graph.num_nodes();
    let aug: Vec<f64> = (0..n).map(|u| (graph.degree(u) + 1) as f64).collect();
    let weight = |u: usize, v: usize| 1.0 / (aug[u] * aug[v]).sqrt();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(2 * graph.num_edges() + n);
    let mut values = Vec::with_capacity(indices.capacity());
    offsets.push(0);
    for u in 0..n {
        let mut pushed_diag = false;
        for &v in graph.neighbors(u) {
            if !pushed_diag && v > u {
                indices.push(u);
                values.push(weight(u, u));
                pushed_diag = true;
            }
            indices.push(v);
            values.push(weight(u, v));
        }
        if !pushed_diag {
            indices.push(u);
            values.push(weight(u, u));
        }
        offsets.push(indices.len());
    }
    SparseOperator {
        n,
        offsets,
        indices,
        values,
    }
}
