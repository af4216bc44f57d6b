use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functional::FunctionalSpec;

fn one() -> usize {
    1
}

/// Scalar hyperparameters of a run.
///
/// `steps` is the number of time steps `T`, `particles` the number of real
/// particles `n`. The initial law is `N(init_mean, init_scale² I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eta: f64,
    pub steps: usize,
    pub particles: usize,
    pub sigma: f64,
    #[serde(default = "one")]
    pub batch_size: usize,
    pub master_seed: u64,
    pub init_mean: Vec<f64>,
    pub init_scale: f64,
    pub dim: usize,
    /// Permits `sigma = 0`. Zero diffusion is outside the convergence theory.
    #[serde(default)]
    pub deterministic_flow: bool,
    /// Record diagnostics every this many steps; `0` keeps only the first
    /// and last step.
    #[serde(default)]
    pub trace_every: usize,
    /// Evaluate the energy parts at each recorded step.
    #[serde(default)]
    pub trace_energy: bool,
}

impl RunConfig {
    /// Standard-normal start, batch size one.
    pub fn new(dim: usize, eta: f64, steps: usize, particles: usize, sigma: f64, seed: u64) -> Self {
        Self {
            eta,
            steps,
            particles,
            sigma,
            batch_size: 1,
            master_seed: seed,
            init_mean: vec![0.0; dim],
            init_scale: 1.0,
            dim,
            deterministic_flow: false,
            trace_every: 0,
            trace_energy: false,
        }
    }

    pub fn with_init(mut self, mean: Vec<f64>, scale: f64) -> Self {
        self.init_mean = mean;
        self.init_scale = scale;
        self
    }

    pub fn with_batch(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_trace(mut self, every: usize, energy: bool) -> Self {
        self.trace_every = every;
        self.trace_energy = energy;
        self
    }

    /// Full validation of a run: shape checks plus `eta > 0` whenever
    /// `steps > 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if self.steps > 0 && self.eta <= 0.0 {
            return Err(Error::Config(format!(
                "eta must be positive when steps > 0, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Checks everything except positivity of the step size, so single
    /// updates and oracles can be evaluated at `eta = 0`.
    pub fn validate_shape(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.init_mean.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: self.init_mean.len(),
            });
        }
        if self.init_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("init_mean must be finite".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::Config("init_scale must be finite and non-negative".into()));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Config(format!("eta must be non-negative, got {}", self.eta)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.sigma == 0.0 && !self.deterministic_flow {
            return Err(Error::Config(
                "sigma = 0 requires deterministic_flow = true".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Validation plus agreement with the functional's dimension and diffusion.
    pub fn validate_against(&self, functional: &FunctionalSpec) -> Result<()> {
        self.validate()?;
        self.check_functional(functional)
    }

    pub(crate) fn check_functional(&self, functional: &FunctionalSpec) -> Result<()> {
        if functional.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: functional.dim(),
            });
        }
        if functional.sigma() != self.sigma {
            return Err(Error::Config(format!(
                "run sigma {} differs from functional sigma {}",
                self.sigma,
                functional.sigma()
            )));
        }
        Ok(())
    }

    /// Fields that determine the witness path. The real-particle count and
    /// trace options are excluded so a witness can be replayed under any `n`.
    fn digest_value(&self) -> serde_json::Value {
        serde_json::json!({
            "eta": self.eta,
            "steps": self.steps,
            "sigma": self.sigma,
            "batch_size": self.batch_size,
            "master_seed": self.master_seed,
            "init_mean": self.init_mean,
            "init_scale": self.init_scale,
            "dim": self.dim,
            "deterministic_flow": self.deterministic_flow,
        })
    }
}

/// SHA-256 over the canonical JSON of the run parameters and the functional.
pub fn config_hash(config: &RunConfig, functional: &FunctionalSpec) -> [u8; 32] {
    let doc = serde_json::json!({
        "run": config.digest_value(),
        "functional": functional.descriptor(),
    });
    let bytes = serde_json::to_vec(&doc).expect("json values always serialize");
    let digest = Sha256::digest(&bytes);
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}
