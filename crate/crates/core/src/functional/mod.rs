//! Energy functionals and their drift estimators.

mod assumptions;
mod dataset;
mod mfnn;
mod pairwise;

pub use assumptions::{check_assumptions, AssumptionCheck, AssumptionReport};
pub use dataset::Dataset;
pub use mfnn::{mfnn_energy, mfnn_estimate, mfnn_exact_gradient, MfnnConstants, MfnnEnergy, MfnnSpec};
pub use pairwise::{
    pairwise_energy, pairwise_estimate, pairwise_exact_gradient, PairwiseEnergy, PairwiseSpec, Potential,
    SmoothPotential,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};

/// Auxiliary estimator randomness `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Xi {
    /// The pairwise estimator needs no auxiliary randomness.
    Unit,
    /// Data index drawn uniformly from `[m]` (0-based).
    Index(usize),
}

/// The estimator contract a functional offers to the dynamics:
/// an unbiased drift estimate `Ĝ(x, y, ξ)`, a sampler for `ξ`, and the exact
/// gradient against an empirical measure.
pub trait EstimatorContract: Sync {
    fn dim(&self) -> usize;

    fn sample_xi<R: Rng>(&self, rng: &mut R) -> Xi;

    /// The finite support of `ν` used for exact averaging.
    fn xi_support(&self) -> Vec<Xi>;

    fn estimate(&self, x: &[f64], y: &[f64], xi: Xi) -> Result<Vec<f64>>;

    fn exact_empirical_gradient(&self, x: &[f64], cloud: &ParticleCloud) -> Result<Vec<f64>>;
}

impl EstimatorContract for PairwiseSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_xi<R: Rng>(&self, _: &mut R) -> Xi {
        Xi::Unit
    }

    fn xi_support(&self) -> Vec<Xi> {
        vec![Xi::Unit]
    }

    fn estimate(&self, x: &[f64], y: &[f64], _: Xi) -> Result<Vec<f64>> {
        pairwise_estimate(x, y, self)
    }

    fn exact_empirical_gradient(&self, x: &[f64], cloud: &ParticleCloud) -> Result<Vec<f64>> {
        pairwise_exact_gradient(x, cloud, self)
    }
}

impl EstimatorContract for MfnnSpec {
    fn dim(&self) -> usize {
        MfnnSpec::dim(self)
    }

    fn sample_xi<R: Rng>(&self, rng: &mut R) -> Xi {
        Xi::Index(rng.random_range(0..self.len()))
    }

    fn xi_support(&self) -> Vec<Xi> {
        (0..self.len()).map(Xi::Index).collect()
    }

    fn estimate(&self, x: &[f64], y: &[f64], xi: Xi) -> Result<Vec<f64>> {
        match xi {
            Xi::Index(i) => mfnn_estimate(x, y, i, self),
            Xi::Unit => Err(Error::Spec("network estimator needs a data index".into())),
        }
    }

    fn exact_empirical_gradient(&self, x: &[f64], cloud: &ParticleCloud) -> Result<Vec<f64>> {
        mfnn_exact_gradient(x, cloud, self)
    }
}

/// Tagged description of the target functional.
#[derive(Clone, Debug)]
pub enum FunctionalSpec {
    Pairwise(PairwiseSpec),
    Mfnn(MfnnSpec),
}

/// Energy parts of an empirical measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Energy {
    Pairwise(PairwiseEnergy),
    Mfnn(MfnnEnergy),
}

impl Energy {
    /// The two parts of `F`, in column order.
    pub fn parts(&self) -> (f64, f64) {
        match self {
            Energy::Pairwise(e) => (e.v_part, e.w_part),
            Energy::Mfnn(e) => (e.loss, e.ridge),
        }
    }

    /// `F` without the entropy term.
    pub fn f_part(&self) -> f64 {
        let (a, b) = self.parts();
        a + b
    }

    pub fn entropy_estimate(&self) -> Option<f64> {
        match self {
            Energy::Pairwise(e) => e.entropy_estimate,
            Energy::Mfnn(e) => e.entropy_estimate,
        }
    }
}

/// Per-step precomputation for exact empirical gradients.
pub(crate) enum DriftContext<'a> {
    Pairwise(&'a [f64]),
    Mfnn(Vec<f64>),
}

impl FunctionalSpec {
    pub fn dim(&self) -> usize {
        match self {
            FunctionalSpec::Pairwise(p) => p.dim,
            FunctionalSpec::Mfnn(m) => m.dim(),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            FunctionalSpec::Pairwise(p) => p.sigma,
            FunctionalSpec::Mfnn(m) => m.sigma,
        }
    }

    pub fn as_pairwise(&self) -> Option<&PairwiseSpec> {
        match self {
            FunctionalSpec::Pairwise(p) => Some(p),
            FunctionalSpec::Mfnn(_) => None,
        }
    }

    pub fn as_mfnn(&self) -> Option<&MfnnSpec> {
        match self {
            FunctionalSpec::Mfnn(m) => Some(m),
            FunctionalSpec::Pairwise(_) => None,
        }
    }

    /// Smoothness constant of the drift estimator in `x`.
    pub fn drift_lipschitz(&self) -> f64 {
        match self {
            FunctionalSpec::Pairwise(p) => {
                let (lv, lw) = p.smoothness();
                lv + lw
            }
            FunctionalSpec::Mfnn(m) => m.constants.drift_lipschitz(m.lambda),
        }
    }

    pub fn descriptor(&self) -> serde_json::Value {
        match self {
            FunctionalSpec::Pairwise(p) => p.descriptor(),
            FunctionalSpec::Mfnn(m) => m.descriptor(),
        }
    }

    /// Whether `xi` is a valid draw for this functional.
    pub fn accepts_xi(&self, xi: Xi) -> bool {
        match (self, xi) {
            (FunctionalSpec::Pairwise(_), Xi::Unit) => true,
            (FunctionalSpec::Mfnn(m), Xi::Index(i)) => i < m.len(),
            _ => false,
        }
    }

    /// Drift estimate into `out`. `scratch` must have length `d`; `xi` must
    /// be accepted by [`FunctionalSpec::accepts_xi`].
    #[inline]
    pub(crate) fn estimate_into(&self, x: &[f64], y: &[f64], xi: Xi, out: &mut [f64], scratch: &mut [f64]) {
        match self {
            FunctionalSpec::Pairwise(p) => p.estimate_into(x, y, out, scratch),
            FunctionalSpec::Mfnn(m) => {
                let Xi::Index(i) = xi else {
                    panic!("network estimator called without a data index")
                };
                m.estimate_into(x, y, i, out)
            }
        }
    }

    pub(crate) fn drift_context<'a>(&self, support: &'a [f64]) -> DriftContext<'a> {
        match self {
            FunctionalSpec::Pairwise(_) => DriftContext::Pairwise(support),
            FunctionalSpec::Mfnn(m) => DriftContext::Mfnn(m.predictions_of(support)),
        }
    }

    /// Exact gradient from a prepared context; returns kernel evaluations.
    pub(crate) fn exact_gradient_with(&self, ctx: &DriftContext<'_>, x: &[f64], out: &mut [f64]) -> u64 {
        match (self, ctx) {
            (FunctionalSpec::Pairwise(p), DriftContext::Pairwise(support)) => p.exact_gradient_into(x, support, out),
            (FunctionalSpec::Mfnn(m), DriftContext::Mfnn(preds)) => m.gradient_from_predictions(x, preds, out),
            _ => unreachable!("drift context built for a different functional"),
        }
    }

    /// Kernel evaluations spent building a context over `n` particles.
    pub(crate) fn context_cost(&self, n: usize) -> u64 {
        match self {
            FunctionalSpec::Pairwise(_) => 0,
            FunctionalSpec::Mfnn(m) => (n * m.len()) as u64,
        }
    }

    pub fn energy(&self, cloud: &ParticleCloud) -> Result<Energy> {
        match self {
            FunctionalSpec::Pairwise(p) => pairwise_energy(cloud, p).map(Energy::Pairwise),
            FunctionalSpec::Mfnn(m) => mfnn_energy(cloud, m).map(Energy::Mfnn),
        }
    }

    /// Column names of [`Energy::parts`].
    pub fn energy_labels(&self) -> (&'static str, &'static str) {
        match self {
            FunctionalSpec::Pairwise(_) => ("v_part", "w_part"),
            FunctionalSpec::Mfnn(_) => ("loss", "ridge"),
        }
    }
}

impl EstimatorContract for FunctionalSpec {
    fn dim(&self) -> usize {
        FunctionalSpec::dim(self)
    }

    fn sample_xi<R: Rng>(&self, rng: &mut R) -> Xi {
        match self {
            FunctionalSpec::Pairwise(p) => p.sample_xi(rng),
            FunctionalSpec::Mfnn(m) => m.sample_xi(rng),
        }
    }

    fn xi_support(&self) -> Vec<Xi> {
        match self {
            FunctionalSpec::Pairwise(p) => p.xi_support(),
            FunctionalSpec::Mfnn(m) => m.xi_support(),
        }
    }

    fn estimate(&self, x: &[f64], y: &[f64], xi: Xi) -> Result<Vec<f64>> {
        match self {
            FunctionalSpec::Pairwise(p) => p.estimate(x, y, xi),
            FunctionalSpec::Mfnn(m) => m.estimate(x, y, xi),
        }
    }

    fn exact_empirical_gradient(&self, x: &[f64], cloud: &ParticleCloud) -> Result<Vec<f64>> {
        match self {
            FunctionalSpec::Pairwise(p) => p.exact_empirical_gradient(x, cloud),
            FunctionalSpec::Mfnn(m) => m.exact_empirical_gradient(x, cloud),
        }
    }
}
