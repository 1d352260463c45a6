use std::io::{BufRead, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Two graph-convolution layers followed by a linear predictor.
///
/// Gradients share this type: a gradient is a parameter-shaped set of
/// partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub wp: Matrix,
    pub bp: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub in_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub num_classes: usize,
}

fn glorot(rows: usize, cols: usize, rng: &mut rng::Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect(),
    )
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            w1: Matrix::zeros(dims.in_dim, dims.hidden1),
            b1: vec![0.0; dims.hidden1],
            w2: Matrix::zeros(dims.hidden1, dims.hidden2),
            b2: vec![0.0; dims.hidden2],
            wp: Matrix::zeros(dims.hidden2, dims.num_classes),
            bp: vec![0.0; dims.num_classes],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        Self {
            w1: glorot(dims.in_dim, dims.hidden1, &mut rng),
            b1: vec![0.0; dims.hidden1],
            w2: glorot(dims.hidden1, dims.hidden2, &mut rng),
            b2: vec![0.0; dims.hidden2],
            wp: glorot(dims.hidden2, dims.num_classes, &mut rng),
            bp: vec![0.0; dims.num_classes],
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            in_dim: self.w1.rows(),
            hidden1: self.w1.cols(),
            hidden2: self.w2.cols(),
            num_classes: self.wp.cols(),
        }
    }

    /// Tensors in serialization order: w1, b1, w2, b2, wp, bp.
    pub fn tensors(&self) -> [(&'static str, &[f64]); 6] {
        [
            ("w1", self.w1.as_slice()),
            ("b1", &self.b1),
            ("w2", self.w2.as_slice()),
            ("b2", &self.b2),
            ("wp", self.wp.as_slice()),
            ("bp", &self.bp),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 6] {
        [
            ("w1", self.w1.as_mut_slice()),
            ("b1", &mut self.b1),
            ("w2", self.w2.as_mut_slice()),
            ("b2", &mut self.b2),
            ("wp", self.wp.as_mut_slice()),
            ("bp", &mut self.bp),
        ]
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    /// Newline-terminated JSON header, then every tensor as little-endian
    /// `f64` in [`ModelParams::tensors`] order (matrices row-major).
    pub fn write_bundle(&self, seed: u64, out: &mut impl Write) -> Result<()> {
        let header = BundleHeader {
            format: "commaudit-model".into(),
            version: 1,
            dims: self.dims(),
            seed,
            tensors: self
                .tensors()
                .iter()
                .map(|(name, _)| name.to_string())
                .collect(),
        };
        serde_json::to_writer(&mut *out, &header)?;
        out.write_all(b"\n")?;
        for (_, t) in self.tensors() {
            for x in t {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_bundle(input: &mut impl BufRead) -> Result<(Self, u64)> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: BundleHeader = serde_json::from_str(line.trim_end())?;
        if header.format != "commaudit-model" || header.version != 1 {
            return Err(Error::ConfigInvalid(format!(
                "unsupported model bundle {} v{}",
                header.format, header.version
            )));
        }
        let mut params = ModelParams::zeros(header.dims);
        let mut buf = [0u8; 8];
        for (_, t) in params.tensors_mut() {
            for x in t.iter_mut() {
                input.read_exact(&mut buf)?;
                *x = f64::from_le_bytes(buf);
            }
        }
        Ok((params, header.seed))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleHeader {
    format: String,
    version: u32,
    dims: ModelDims,
    seed: u64,
    tensors: Vec<String>,
}
