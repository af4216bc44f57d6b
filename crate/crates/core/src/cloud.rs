use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParticleKind {
    Real,
    Virtual,
}

/// A set of `d`-dimensional particle positions, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud {
    dim: usize,
    positions: Vec<f64>,
    pub step_index: usize,
    pub kind: ParticleKind,
}

impl ParticleCloud {
    /// Builds a cloud from flat row-major positions. Rejects ragged input and
    /// non-finite coordinates.
    pub fn new(dim: usize, positions: Vec<f64>, step_index: usize, kind: ParticleKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("cloud dimension must be at least 1".into()));
        }
        if !positions.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: positions.len() % dim,
            });
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: step_index,
                entity: "cloud",
                index: i / dim,
            });
        }
        Ok(Self {
            dim,
            positions,
            step_index,
            kind,
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyCloud)?;
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        Self::new(dim, flat, 0, ParticleKind::Real)
    }

    pub(crate) fn from_raw(dim: usize, positions: Vec<f64>, step_index: usize, kind: ParticleKind) -> Self {
        debug_assert_eq!(positions.len() % dim, 0);
        Self {
            dim,
            positions,
            step_index,
            kind,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self::from_raw(dim, Vec::new(), 0, ParticleKind::Real)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    pub fn mean(&self) -> Result<DVector<f64>> {
        if self.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut m = DVector::zeros(self.dim);
        for p in self.iter() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        Ok(m / self.len() as f64)
    }

    /// Unbiased sample covariance; zero for a single particle.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let mean = self.mean()?;
        let n = self.len();
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        if n < 2 {
            return Ok(cov);
        }
        let mut centered = vec![0.0; self.dim];
        for p in self.iter() {
            for (c, (v, m)) in centered.iter_mut().zip(p.iter().zip(mean.iter())) {
                *c = v - m;
            }
            for a in 0..self.dim {
                for b in a..self.dim {
                    cov[(a, b)] += centered[a] * centered[b];
                }
            }
        }
        for a in 0..self.dim {
            for b in a..self.dim {
                let v = cov[(a, b)] / (n - 1) as f64;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        Ok(cov)
    }

    /// Mean of the squared norms of the particles.
    pub fn mean_square_norm(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(self.positions.iter().map(|v| v * v).sum::<f64>() / self.len() as f64)
    }

    /// Differential entropy of the Gaussian with the cloud's mean and
    /// covariance. `None` when the covariance is singular.
    pub fn gaussian_entropy(&self) -> Result<Option<f64>> {
        let cov = self.covariance()?;
        let d = self.dim as f64;
        let scale = cov.diagonal().max();
        let Some(chol) = cov.cholesky() else {
            return Ok(None);
        };
        // Pivots at round-off level mean a rank-deficient cloud.
        if chol.l().diagonal().iter().any(|p| p * p <= 1e-12 * scale) {
            return Ok(None);
        }
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        Ok(log_det
            .is_finite()
            .then(|| 0.5 * (d * (1.0 + (2.0 * std::f64::consts::PI).ln()) + log_det)))
    }
}
