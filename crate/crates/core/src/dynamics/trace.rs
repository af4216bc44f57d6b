use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cloud::{ParticleCloud, ParticleKind};
use crate::error::Result;
use crate::functional::{Energy, FunctionalSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Vpsa,
    Pmkv,
    Replay,
}

/// Diagnostics of the real cloud after `step` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub elapsed_secs: f64,
    /// Cumulative estimator invocations (VPSA) or kernel evaluations (pMKV).
    pub evals: u64,
    pub mean_norm: f64,
    pub cov_trace: f64,
    pub energy: Option<Energy>,
    pub oracle_kl: Option<f64>,
    pub oracle_w2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsTrace {
    pub method: Method,
    pub records: Vec<StepRecord>,
    pub total_evals: u64,
}

impl DiagnosticsTrace {
    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

pub(crate) struct Recorder<'a> {
    functional: &'a FunctionalSpec,
    every: usize,
    steps: usize,
    energy: bool,
    start: Instant,
    trace: DiagnosticsTrace,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(method: Method, functional: &'a FunctionalSpec, steps: usize, every: usize, energy: bool) -> Self {
        Self {
            functional,
            every,
            steps,
            energy,
            start: Instant::now(),
            trace: DiagnosticsTrace {
                method,
                records: Vec::new(),
                total_evals: 0,
            },
        }
    }

    fn wants(&self, step: usize) -> bool {
        step == 0 || step == self.steps || (self.every > 0 && step.is_multiple_of(self.every))
    }

    pub(crate) fn observe(&mut self, step: usize, evals: u64, positions: &[f64], dim: usize) -> Result<()> {
        self.trace.total_evals = evals;
        if !self.wants(step) || positions.is_empty() {
            return Ok(());
        }
        let cloud = &ParticleCloud::from_raw(dim, positions.to_vec(), step, ParticleKind::Real);
        let mean_norm = cloud.mean()?.norm();
        let cov_trace = cloud.covariance()?.trace();
        let energy = if self.energy {
            Some(self.functional.energy(cloud)?)
        } else {
            None
        };
        self.trace.records.push(StepRecord {
            step,
            elapsed_secs: self.start.elapsed().as_secs_f64(),
            evals,
            mean_norm,
            cov_trace,
            energy,
            oracle_kl: None,
            oracle_w2: None,
        });
        Ok(())
    }

    pub(crate) fn finish(self) -> DiagnosticsTrace {
        self.trace
    }
}
