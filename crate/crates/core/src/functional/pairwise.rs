//! Pairwise interaction energy
//! `F(μ) = ∫V dμ + (1/2)∫∫W(x − y) dμ(x) dμ(y)` with `W` even.
//!
//! The drift estimator is `Ĝ(x, y) = −∇V(x) − ∇W(x − y)`; averaging it over
//! `y ∼ μ` gives `−(∇V + ∇W ∗ μ)(x)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};

/// A user-supplied smooth potential on `R^d`.
pub trait SmoothPotential: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    /// Writes `∇f(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Declared Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;
    /// Stable identifier, used when hashing run parameters.
    fn label(&self) -> String;
}

/// External potential `V` or interaction kernel `W`.
#[derive(Clone, Debug)]
pub enum Potential {
    /// `(λ/2)‖x‖²`.
    Quadratic { lambda: f64 },
    Smooth(Arc<dyn SmoothPotential>),
}

impl Potential {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Quadratic { lambda } => 0.5 * lambda * x.iter().map(|v| v * v).sum::<f64>(),
            Potential::Smooth(p) => p.value(x),
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Potential::Quadratic { lambda } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = lambda * v;
                }
            }
            Potential::Smooth(p) => p.gradient(x, out),
        }
    }

    pub fn smoothness(&self) -> f64 {
        match self {
            Potential::Quadratic { lambda } => lambda.abs(),
            Potential::Smooth(p) => p.smoothness(),
        }
    }

    fn descriptor(&self) -> serde_json::Value {
        match self {
            Potential::Quadratic { lambda } => serde_json::json!({ "quadratic": lambda }),
            Potential::Smooth(p) => serde_json::json!({
                "smooth": p.label(),
                "smoothness": p.smoothness(),
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PairwiseSpec {
    pub potential: Potential,
    pub interaction: Potential,
    pub sigma: f64,
    pub dim: usize,
}

impl PairwiseSpec {
    pub fn new(potential: Potential, interaction: Potential, sigma: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Spec("dimension must be at least 1".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Spec(format!("sigma must be non-negative, got {sigma}")));
        }
        for (name, p) in [("potential", &potential), ("interaction", &interaction)] {
            match p {
                Potential::Quadratic { lambda } if !lambda.is_finite() => {
                    return Err(Error::Spec(format!("{name} coefficient must be finite")));
                }
                Potential::Smooth(s) if !(s.smoothness() > 0.0 && s.smoothness().is_finite()) => {
                    return Err(Error::Spec(format!(
                        "{name} must declare a positive smoothness constant, got {}",
                        s.smoothness()
                    )));
                }
                _ => {}
            }
        }
        let spec = Self {
            potential,
            interaction,
            sigma,
            dim,
        };
        if let Some(err) = spec.odd_gradient_defect(16, 0x0DD) {
            return Err(Error::Spec(format!(
                "interaction gradient is not odd (defect {err:.3e}); W must be even"
            )));
        }
        Ok(spec)
    }

    /// `V(x) = (λ_V/2)‖x‖²`, `W(v) = (α/2)‖v‖²`.
    pub fn quadratic(lambda_v: f64, alpha: f64, sigma: f64, dim: usize) -> Result<Self> {
        Self::new(
            Potential::Quadratic { lambda: lambda_v },
            Potential::Quadratic { lambda: alpha },
            sigma,
            dim,
        )
    }

    /// `(λ_V, α)` when both parts are quadratic.
    pub fn quadratic_coefficients(&self) -> Option<(f64, f64)> {
        match (&self.potential, &self.interaction) {
            (Potential::Quadratic { lambda: v }, Potential::Quadratic { lambda: w }) => Some((*v, *w)),
            _ => None,
        }
    }

    pub fn smoothness(&self) -> (f64, f64) {
        (self.potential.smoothness(), self.interaction.smoothness())
    }

    /// Largest relative violation of `∇W(−v) = −∇W(v)` over random probes,
    /// or `None` when every probe passes at `1e−9`.
    pub fn odd_gradient_defect(&self, probes: usize, seed: u64) -> Option<f64> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let d = self.dim;
        let (mut v, mut neg) = (vec![0.0; d], vec![0.0; d]);
        let (mut g_pos, mut g_neg) = (vec![0.0; d], vec![0.0; d]);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            for (a, b) in v.iter_mut().zip(neg.iter_mut()) {
                *a = rng.random_range(-3.0..3.0);
                *b = -*a;
            }
            self.interaction.gradient(&v, &mut g_pos);
            self.interaction.gradient(&neg, &mut g_neg);
            let scale = g_pos.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for (p, n) in g_pos.iter().zip(&g_neg) {
                worst = worst.max((p + n).abs() / scale);
            }
        }
        (worst > 1e-9).then_some(worst)
    }

    pub(crate) fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "pairwise",
            "potential": self.potential.descriptor(),
            "interaction": self.interaction.descriptor(),
            "sigma": self.sigma,
            "dim": self.dim,
        })
    }

    /// `Ĝ(x, y)` written into `out`. `scratch` has length `d`.
    #[inline]
    pub(crate) fn estimate_into(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        match (&self.potential, &self.interaction) {
            (Potential::Quadratic { lambda }, Potential::Quadratic { lambda: alpha }) => {
                for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                    *o = -(lambda * xi) - alpha * (xi - yi);
                }
            }
            _ => {
                for ((s, xi), yi) in scratch.iter_mut().zip(x).zip(y) {
                    *s = xi - yi;
                }
                self.interaction.gradient(scratch, out);
                self.potential.gradient(x, scratch);
                for (o, v) in out.iter_mut().zip(scratch.iter()) {
                    *o = -*v - *o;
                }
            }
        }
    }

    /// `∇V(x) + (1/n)Σ_j ∇W(x − y_j)` into `out`; returns the number of
    /// interaction-gradient evaluations (`n`).
    pub(crate) fn exact_gradient_into(&self, x: &[f64], support: &[f64], out: &mut [f64]) -> u64 {
        let d = self.dim;
        let n = support.len() / d;
        let mut acc = vec![0.0; d];
        let mut diff = vec![0.0; d];
        let mut grad = vec![0.0; d];
        for y in support.chunks_exact(d) {
            for ((s, xi), yi) in diff.iter_mut().zip(x).zip(y) {
                *s = xi - yi;
            }
            self.interaction.gradient(&diff, &mut grad);
            for (a, g) in acc.iter_mut().zip(&grad) {
                *a += g;
            }
        }
        self.potential.gradient(x, out);
        for (o, a) in out.iter_mut().zip(&acc) {
            *o += a / n as f64;
        }
        n as u64
    }
}

/// `−∇V(x) − ∇W(x − y)`.
pub fn pairwise_estimate(x: &[f64], y: &[f64], spec: &PairwiseSpec) -> Result<Vec<f64>> {
    check_dim(spec.dim, x.len())?;
    check_dim(spec.dim, y.len())?;
    let mut out = vec![0.0; spec.dim];
    let mut scratch = vec![0.0; spec.dim];
    spec.estimate_into(x, y, &mut out, &mut scratch);
    Ok(out)
}

/// Gradient of the interaction energy against the empirical measure of
/// `cloud` (entropy excluded). The interacting-particle drift is its negation.
pub fn pairwise_exact_gradient(x: &[f64], cloud: &ParticleCloud, spec: &PairwiseSpec) -> Result<Vec<f64>> {
    check_dim(spec.dim, x.len())?;
    check_dim(spec.dim, cloud.dim())?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut out = vec![0.0; spec.dim];
    spec.exact_gradient_into(x, cloud.positions(), &mut out);
    Ok(out)
}

/// Energy parts of the empirical measure of a cloud.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairwiseEnergy {
    /// `mean_i V(x_i)`.
    pub v_part: f64,
    /// `(1/2)·mean_{i,j} W(x_i − x_j)`, diagonal terms included.
    pub w_part: f64,
    /// Gaussian plug-in entropy estimate; `None` for a singular covariance.
    pub entropy_estimate: Option<f64>,
}

pub fn pairwise_energy(cloud: &ParticleCloud, spec: &PairwiseSpec) -> Result<PairwiseEnergy> {
    check_dim(spec.dim, cloud.dim())?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let n = cloud.len() as f64;
    let v_part = cloud.iter().map(|x| spec.potential.value(x)).sum::<f64>() / n;
    let w_part = match spec.interaction {
        // (1/2)·mean_{i,j} (α/2)‖x_i − x_j‖² = (α/2)(mean‖x‖² − ‖x̄‖²)
        Potential::Quadratic { lambda: alpha } => {
            let mean = cloud.mean()?;
            0.5 * alpha * (cloud.mean_square_norm()? - mean.norm_squared())
        }
        Potential::Smooth(_) => {
            let mut diff = vec![0.0; spec.dim];
            let mut total = 0.0;
            for x in cloud.iter() {
                for y in cloud.iter() {
                    for ((s, a), b) in diff.iter_mut().zip(x).zip(y) {
                        *s = a - b;
                    }
                    total += spec.interaction.value(&diff);
                }
            }
            0.5 * total / (n * n)
        }
    };
    Ok(PairwiseEnergy {
        v_part,
        w_part,
        entropy_estimate: cloud.gaussian_entropy()?,
    })
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
