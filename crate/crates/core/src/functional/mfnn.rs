//! Mean-field two-layer network with square loss on a finite dataset.
//!
//! Neurons are particles `x ∈ R^d`, the network output is
//! `f(μ; z) = ∫ h(x, z) dμ(x)` with `h(x, z) = B₀·tanh(⟨x, z⟩)`, and
//!
//! ```text
//! F(μ) = (1/m) Σ_i (f(μ; z_i) − w_i)² + (λ/2) ∫‖x‖² dμ
//! ∇F(x; μ) = (2/m) Σ_i (f(μ; z_i) − w_i) ∇_x h(x, z_i) + λx
//! Ĝ(x, y, i) = −2 (h(y, z_i) − w_i) ∇_x h(x, z_i) − λx,   i ∼ Unif([m])
//! ```

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::pairwise::check_dim;
use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};

/// Bounds of the boundedness and Lipschitz assumptions:
/// `|h| ≤ b`, `‖∇_x h(x, z)‖ ≤ m‖z‖`, `x ↦ ∇_x h(x, z)` is `l‖z‖`-Lipschitz,
/// `‖z‖ ≤ r`, `|w| ≤ r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfnnConstants {
    pub b: f64,
    pub m: f64,
    pub l: f64,
    pub r: f64,
}

/// `max_s |d/ds sech²(s)| = 4/(3√3)`.
const SECH2_SLOPE: f64 = 0.769_800_358_919_501_4;

impl MfnnConstants {
    /// Constants implied by the tanh activation with amplitude `b0`.
    pub fn for_tanh(amplitude: f64, radius: f64) -> Self {
        Self {
            b: amplitude,
            m: amplitude,
            l: amplitude * SECH2_SLOPE * radius,
            r: radius,
        }
    }

    /// Smoothness constant `(B + R)LR + λ + M²R²` of the drift estimator.
    pub fn drift_lipschitz(&self, lambda: f64) -> f64 {
        (self.b + self.r) * self.l * self.r + lambda + self.m * self.m * self.r * self.r
    }
}

#[derive(Clone, Debug)]
pub struct MfnnSpec {
    pub dataset: Dataset,
    pub amplitude: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub constants: MfnnConstants,
}

impl MfnnSpec {
    /// Validates the dataset against `radius` and derives the remaining
    /// constants from the activation.
    pub fn new(dataset: Dataset, amplitude: f64, lambda: f64, sigma: f64, radius: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Spec(format!("amplitude must be positive, got {amplitude}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Spec(format!("lambda must be non-negative, got {lambda}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Spec(format!("sigma must be non-negative, got {sigma}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Spec(format!("radius must be positive, got {radius}")));
        }
        let bad: Vec<String> = (0..dataset.len())
            .filter(|&i| {
                let z = dataset.feature(i);
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                !(norm <= radius && dataset.label(i).abs() <= radius)
            })
            .map(|i| (i + 1).to_string())
            .collect();
        if !bad.is_empty() {
            return Err(Error::Dataset(format!(
                "data points {} exceed the radius {radius}",
                bad.join(", ")
            )));
        }
        Ok(Self {
            dataset,
            amplitude,
            lambda,
            sigma,
            constants: MfnnConstants::for_tanh(amplitude, radius),
        })
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    #[inline]
    fn inner(x: &[f64], z: &[f64]) -> f64 {
        x.iter().zip(z).map(|(a, b)| a * b).sum()
    }

    /// `h(x, z) = B₀ tanh(⟨x, z⟩)`.
    #[inline]
    pub fn activation(&self, x: &[f64], z: &[f64]) -> f64 {
        self.amplitude * Self::inner(x, z).tanh()
    }

    /// `∇_x h(x, z) = B₀ (1 − tanh²⟨x, z⟩) z`.
    pub fn activation_gradient(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        let t = Self::inner(x, z).tanh();
        let c = self.amplitude * (1.0 - t * t);
        for (o, zi) in out.iter_mut().zip(z) {
            *o = c * zi;
        }
    }

    /// `f(μ̂; z_i)` for every data point.
    pub fn predictions(&self, cloud: &ParticleCloud) -> Result<Vec<f64>> {
        check_dim(self.dim(), cloud.dim())?;
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(self.predictions_of(cloud.positions()))
    }

    pub(crate) fn predictions_of(&self, support: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let n = (support.len() / d) as f64;
        (0..self.len())
            .map(|i| {
                let z = self.dataset.feature(i);
                support.chunks_exact(d).map(|x| self.activation(x, z)).sum::<f64>() / n
            })
            .collect()
    }

    #[inline]
    pub(crate) fn estimate_into(&self, x: &[f64], y: &[f64], i: usize, out: &mut [f64]) {
        let z = self.dataset.feature(i);
        let residual = self.activation(y, z) - self.dataset.label(i);
        let t = Self::inner(x, z).tanh();
        let c = -2.0 * residual * self.amplitude * (1.0 - t * t);
        for ((o, zi), xi) in out.iter_mut().zip(z).zip(x) {
            *o = c * zi - self.lambda * xi;
        }
    }

    /// Gradient given precomputed predictions; returns the number of
    /// activation-gradient evaluations (`m`).
    pub(crate) fn gradient_from_predictions(&self, x: &[f64], predictions: &[f64], out: &mut [f64]) -> u64 {
        let d = self.dim();
        let m = self.len();
        let mut acc = vec![0.0; d];
        let mut grad = vec![0.0; d];
        for (i, pred) in predictions.iter().enumerate() {
            self.activation_gradient(x, self.dataset.feature(i), &mut grad);
            let r = pred - self.dataset.label(i);
            for (a, g) in acc.iter_mut().zip(&grad) {
                *a += r * g;
            }
        }
        for ((o, a), xi) in out.iter_mut().zip(&acc).zip(x) {
            *o = 2.0 * a / m as f64 + self.lambda * xi;
        }
        m as u64
    }

    pub(crate) fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "mfnn",
            "amplitude": self.amplitude,
            "lambda": self.lambda,
            "sigma": self.sigma,
            "constants": self.constants,
            "dim": self.dim(),
            "features": self.dataset.features(),
            "labels": self.dataset.labels(),
        })
    }
}

/// `−2(h(y, z_i) − w_i)∇_x h(x, z_i) − λx` for a 0-based data index `i`.
pub fn mfnn_estimate(x: &[f64], y: &[f64], i: usize, spec: &MfnnSpec) -> Result<Vec<f64>> {
    check_dim(spec.dim(), x.len())?;
    check_dim(spec.dim(), y.len())?;
    if i >= spec.len() {
        return Err(Error::IndexOutOfRange { index: i, len: spec.len() });
    }
    let mut out = vec![0.0; spec.dim()];
    spec.estimate_into(x, y, i, &mut out);
    Ok(out)
}

/// Wasserstein gradient of the loss-plus-ridge part against the empirical
/// measure of `cloud`.
pub fn mfnn_exact_gradient(x: &[f64], cloud: &ParticleCloud, spec: &MfnnSpec) -> Result<Vec<f64>> {
    check_dim(spec.dim(), x.len())?;
    let preds = spec.predictions(cloud)?;
    let mut out = vec![0.0; spec.dim()];
    spec.gradient_from_predictions(x, &preds, &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfnnEnergy {
    /// `(1/m) Σ_i (f(μ̂; z_i) − w_i)²`.
    pub loss: f64,
    /// `(λ/2)·mean ‖x_j‖²`.
    pub ridge: f64,
    pub entropy_estimate: Option<f64>,
}

pub fn mfnn_energy(cloud: &ParticleCloud, spec: &MfnnSpec) -> Result<MfnnEnergy> {
    let preds = spec.predictions(cloud)?;
    let loss = preds
        .iter()
        .zip(spec.dataset.labels())
        .map(|(p, w)| (p - w) * (p - w))
        .sum::<f64>()
        / spec.len() as f64;
    Ok(MfnnEnergy {
        loss,
        ridge: 0.5 * spec.lambda * cloud.mean_square_norm()?,
        entropy_estimate: cloud.gaussian_entropy()?,
    })
}
