use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};

/// Eigenvalues down to this are treated as round-off and clipped to zero.
const EIGEN_FLOOR: f64 = -1e-10;

/// A Gaussian `N(mean, covariance)` with symmetric PSD covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSummary {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianSummary {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: covariance.nrows(),
            });
        }
        let sym = (&covariance + covariance.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < EIGEN_FLOOR || !min.is_finite() {
            return Err(Error::Spec(format!("covariance has eigenvalue {min}")));
        }
        let covariance = if min < 0.0 {
            let clipped = eig.eigenvalues.map(|v| v.max(0.0));
            &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
        } else {
            sym
        };
        Ok(Self {
            mean: DVector::from_vec(mean),
            covariance,
        })
    }

    /// `N(mean, variance·I)`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, DMatrix::identity(d, d) * variance)
    }

    /// Gaussian with the cloud's sample mean and covariance. This is a moment
    /// fit, not the law of the cloud.
    pub fn fit(cloud: &ParticleCloud) -> Result<Self> {
        Self::new(cloud.mean()?.as_slice().to_vec(), cloud.covariance()?)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn to_record(&self) -> GaussianRecord {
        GaussianRecord {
            mean: self.mean.as_slice().to_vec(),
            covariance: (0..self.dim())
                .map(|i| self.covariance.row(i).iter().copied().collect())
                .collect(),
        }
    }
}

/// Serializable form of a [`GaussianSummary`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianRecord {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// `KL(a ‖ b)` in closed form. Infinite when `a` is degenerate and `b` is not.
pub fn kl_gaussian(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    let d = a.dim() as f64;
    let chol_b = b.covariance.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let log_det_b: f64 = chol_b.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    if !log_det_b.is_finite() {
        return Err(Error::SingularCovariance);
    }
    let log_det_a: f64 = match a.covariance.clone().cholesky() {
        Some(chol) => chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum(),
        None => f64::NEG_INFINITY,
    };
    if !log_det_a.is_finite() {
        return Ok(f64::INFINITY);
    }
    let trace = chol_b.solve(&a.covariance).trace();
    let delta = &b.mean - &a.mean;
    let quad = delta.dot(&chol_b.solve(&delta));
    Ok((0.5 * (trace + quad - d + log_det_b - log_det_a)).max(0.0))
}

/// 2-Wasserstein distance between Gaussians (Bures form).
pub fn w2_gaussian(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    let root_a = sym_sqrt(&a.covariance);
    let cross = sym_sqrt(&(&root_a * &b.covariance * &root_a));
    let bures = a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
    Ok(((&a.mean - &b.mean).norm_squared() + bures).max(0.0).sqrt())
}
