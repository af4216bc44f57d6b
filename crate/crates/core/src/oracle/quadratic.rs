//! Exact laws for the quadratic pairwise case `V = (λ_V/2)‖x‖²`,
//! `W = (α/2)‖v‖²`.
//!
//! Every update is affine in jointly Gaussian variables, so the joint law of
//! all particles stays Gaussian. Coordinates decouple and the particles that
//! are still updated form an exchangeable family, so the joint covariance of
//! each coordinate is `(v − c)·I + c·11ᵀ`: a marginal variance `v` and a
//! common cross covariance `c`. Propagating `(m, v, c)` is exact.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::functional::PairwiseSpec;
use crate::oracle::gaussian::GaussianSummary;

fn coefficients(spec: &PairwiseSpec) -> Result<(f64, f64)> {
    spec.quadratic_coefficients().ok_or(Error::NotQuadratic)
}

/// `σ²/(2(λ_V + α))`, the per-coordinate variance of the fixed point.
fn stationary_variance(spec: &PairwiseSpec) -> Result<f64> {
    let (lv, alpha) = coefficients(spec)?;
    let kappa = lv + alpha;
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::Spec(format!("λ_V + α must be positive, got {kappa}")));
    }
    Ok(spec.sigma * spec.sigma / (2.0 * kappa))
}

/// The fixed point `π = N(0, s² I)`, `s² = σ²/(2(λ_V + α))`. Degenerate at
/// the origin when `σ = 0`.
pub fn quadratic_stationary(spec: &PairwiseSpec) -> Result<GaussianSummary> {
    let s2 = stationary_variance(spec)?;
    GaussianSummary::isotropic(vec![0.0; spec.dim], s2)
}

/// Log-Sobolev constant of the fixed point with the consistency bounds
/// `Var(π) ≤ d·C_LSI` and `C_LSI ≥ 1/L` evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiConstant {
    pub c_lsi: f64,
    /// `tr Cov(π) = d·s²`.
    pub variance_trace: f64,
    /// `L = 2(λ_V + α)/σ²`, the smoothness of `−log π`.
    pub potential_smoothness: f64,
    pub variance_bound_holds: bool,
    pub smoothness_bound_holds: bool,
}

/// `C_LSI = s²` for `π = N(0, s² I)` under the convention
/// `KL(μ‖π) ≤ (C_LSI/2)·FD(μ‖π)`. Both consistency bounds hold with equality.
pub fn quadratic_lsi_constant(spec: &PairwiseSpec) -> Result<LsiConstant> {
    let s2 = stationary_variance(spec)?;
    if s2 == 0.0 {
        return Err(Error::Spec("LSI constant requires sigma > 0".into()));
    }
    let (lv, alpha) = coefficients(spec)?;
    let l = 2.0 * (lv + alpha) / (spec.sigma * spec.sigma);
    let d = spec.dim as f64;
    let tol = 1e-12 * s2;
    Ok(LsiConstant {
        c_lsi: s2,
        variance_trace: d * s2,
        potential_smoothness: l,
        variance_bound_holds: d * s2 <= d * s2 + tol * d,
        smoothness_bound_holds: s2 + tol >= 1.0 / l,
    })
}

/// Exact moments of one coordinate block after `step` steps: every live
/// particle has mean `mean`, variance `variance` per coordinate, and any two
/// distinct live particles have covariance `cross_covariance` per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeableMoments {
    pub step: usize,
    pub mean: Vec<f64>,
    pub variance: f64,
    pub cross_covariance: f64,
}

impl ExchangeableMoments {
    /// Law of a single particle.
    pub fn marginal(&self) -> Result<GaussianSummary> {
        GaussianSummary::isotropic(self.mean.clone(), self.variance)
    }

    /// Per-coordinate joint covariance of `k` live particles.
    pub fn joint_covariance(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k, k, |i, j| if i == j { self.variance } else { self.cross_covariance })
    }

    /// Variance of the sample mean of `n` particles in one coordinate:
    /// `c + (v − c)/n`.
    pub fn sample_mean_variance(&self, n: usize) -> f64 {
        self.cross_covariance + (self.variance - self.cross_covariance) / n as f64
    }
}

struct Affine {
    a: f64,
    b: f64,
    diffusion: f64,
    mean_factor: f64,
}

fn affine(config: &RunConfig, spec: &PairwiseSpec) -> Result<Affine> {
    let (lv, alpha) = coefficients(spec)?;
    config.validate_shape()?;
    if config.dim != spec.dim {
        return Err(Error::Dimension {
            expected: config.dim,
            got: spec.dim,
        });
    }
    if config.sigma != spec.sigma {
        return Err(Error::Config(format!(
            "run sigma {} differs from functional sigma {}",
            config.sigma, spec.sigma
        )));
    }
    if config.batch_size != 1 {
        return Err(Error::BatchUnsupported(config.batch_size));
    }
    let eta = config.eta;
    Ok(Affine {
        a: 1.0 - eta * (lv + alpha),
        b: eta * alpha,
        diffusion: config.sigma * config.sigma * eta,
        mean_factor: 1.0 - eta * lv,
    })
}

fn initial(config: &RunConfig) -> ExchangeableMoments {
    ExchangeableMoments {
        step: 0,
        mean: config.init_mean.clone(),
        variance: config.init_scale * config.init_scale,
        cross_covariance: 0.0,
    }
}

fn propagate(
    config: &RunConfig,
    map: &Affine,
    update: impl Fn(f64, f64) -> (f64, f64),
) -> Vec<ExchangeableMoments> {
    let mut out = Vec::with_capacity(config.steps + 1);
    let mut cur = initial(config);
    out.push(cur.clone());
    for k in 1..=config.steps {
        let (v, c) = update(cur.variance, cur.cross_covariance);
        cur = ExchangeableMoments {
            step: k,
            mean: cur.mean.iter().map(|m| map.mean_factor * m).collect(),
            variance: v,
            cross_covariance: c,
        };
        out.push(cur.clone());
    }
    out
}

/// Moments of the virtual particle scheme at steps `0..=T`.
///
/// At step `k` each live particle `X` (real, or virtual with index `> k`)
/// moves to `aX + bY + σ√η Z` where `Y` is the frozen witness, itself a live
/// member of the family. Hence
/// `v⁺ = (a² + b²)v + 2abc + σ²η` and `c⁺ = (a² + 2ab)c + b²v`.
pub fn vpsa_moments(config: &RunConfig, spec: &PairwiseSpec) -> Result<Vec<ExchangeableMoments>> {
    let m = affine(config, spec)?;
    let (a, b, q) = (m.a, m.b, m.diffusion);
    Ok(propagate(config, &m, |v, c| {
        (a * a * v + 2.0 * a * b * c + b * b * v + q, a * a * c + 2.0 * a * b * c + b * b * v)
    }))
}

/// Moments of the `n`-particle system with exact empirical drift, where
/// `X_i⁺ = aX_i + b·X̄ + σ√η Z_i`. With `s = (v + (n − 1)c)/n`,
/// `v⁺ = a²v + (2ab + b²)s + σ²η` and `c⁺ = a²c + (2ab + b²)s`.
pub fn pmkv_moments(config: &RunConfig, spec: &PairwiseSpec) -> Result<Vec<ExchangeableMoments>> {
    if config.particles == 0 {
        return Err(Error::EmptyCloud);
    }
    let m = affine(config, spec)?;
    let (a, b, q) = (m.a, m.b, m.diffusion);
    let n = config.particles as f64;
    Ok(propagate(config, &m, |v, c| {
        let s = (v + (n - 1.0) * c) / n;
        (a * a * v + (2.0 * a * b + b * b) * s + q, a * a * c + (2.0 * a * b + b * b) * s)
    }))
}

/// Exact law of a real particle of the virtual particle scheme after each of
/// the steps `0..=T`.
pub fn affine_recursion_oracle(config: &RunConfig, spec: &PairwiseSpec) -> Result<Vec<GaussianSummary>> {
    vpsa_moments(config, spec)?.iter().map(ExchangeableMoments::marginal).collect()
}

/// Law at time `t` of the continuous mean-field dynamics started from
/// `init`: the mean decays at rate `λ_V` and the covariance relaxes to `s²I`
/// at rate `2(λ_V + α)`.
pub fn quadratic_mkv_flow(spec: &PairwiseSpec, init: &GaussianSummary, t: f64) -> Result<GaussianSummary> {
    let (lv, alpha) = coefficients(spec)?;
    if init.dim() != spec.dim {
        return Err(Error::Dimension {
            expected: spec.dim,
            got: init.dim(),
        });
    }
    let s2 = spec.sigma * spec.sigma / (2.0 * (lv + alpha));
    let decay = (-2.0 * (lv + alpha) * t).exp();
    let d = spec.dim;
    let target = DMatrix::identity(d, d) * s2;
    let cov = &target + (init.covariance() - &target) * decay;
    let mean = init.mean() * (-lv * t).exp();
    GaussianSummary::new(mean.as_slice().to_vec(), cov)
}
