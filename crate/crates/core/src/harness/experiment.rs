//! JSON experiment configs and the `run` pipeline.
//!
//! ```json
//! {
//!   "functional": { "kind": "quadratic", "lambda_v": 1.0, "alpha": 0.1 },
//!   "run": { "eta": 0.01, "steps": 1000, "particles": 500, "sigma": 1.0,
//!            "master_seed": 7, "init_mean": [1.0], "init_scale": 1.0, "dim": 1 },
//!   "method": "vpsa",
//!   "oracle": true,
//!   "planner": { "epsilon": 0.1, "apply": true },
//!   "out_dir": "out"
//! }
//! ```
//!
//! Diffusion `sigma` and dimension come from the `run` section. Relative
//! paths (`dataset`, `out_dir`) are resolved against the config file's
//! directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::output::{save_cloud_csv, write_trace_csv};
use crate::cloud::ParticleCloud;
use crate::config::{config_hash, RunConfig};
use crate::dynamics::{pmkv_eval_count, pmkv_run, eval_count, vpsa_run, DiagnosticsTrace, StepRecord, WitnessPath};
use crate::error::{Error, Result};
use crate::functional::{check_assumptions, AssumptionReport, Dataset, FunctionalSpec, MfnnSpec, PairwiseSpec};
use crate::oracle::{
    independence_diagnostic, kl_gaussian, plan_schedule_mfnn, plan_schedule_pairwise, pmkv_moments,
    quadratic_lsi_constant, quadratic_stationary, unbiasedness_test, vpsa_moments, w2_gaussian, GaussianSummary,
    IndependenceReport, MfnnPlanInputs, PairwisePlanInputs, PlanInputs, PlannerConstants, SchedulePlan, UnbiasednessReport,
};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// `V = (λ_V/2)‖x‖²`, `W = (α/2)‖v‖²`.
    Quadratic { lambda_v: f64, alpha: f64 },
    /// Two-layer tanh network fitted to a CSV dataset (label in the last column).
    Mfnn {
        dataset: PathBuf,
        amplitude: f64,
        lambda: f64,
        radius: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMethod {
    #[default]
    Vpsa,
    Pmkv,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub assumptions: bool,
    /// Lags of the cross-particle correlation test; off when absent.
    #[serde(default)]
    pub independence_repeats: Option<usize>,
    /// Monte-Carlo draws of the unbiasedness test at the final cloud; off
    /// when absent.
    #[serde(default)]
    pub unbiasedness_draws: Option<usize>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            assumptions: true,
            independence_repeats: None,
            unbiasedness_draws: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub epsilon: f64,
    /// Replace `run.eta` and `run.steps` by the plan.
    #[serde(default)]
    pub apply: bool,
    /// Required unless the functional is quadratic.
    #[serde(default)]
    pub c_lsi: Option<f64>,
    /// Initial gap `KL(μ₀‖π)` (pairwise) or `E(μ₀) − E(π)` (network).
    /// Computed exactly for the quadratic case when absent.
    #[serde(default)]
    pub initial_gap: Option<f64>,
    #[serde(default)]
    pub constants: PlannerConstants,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functional: FunctionalConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub method: RunMethod,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    /// Attach exact oracle laws to the trace (quadratic only).
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub planner: Option<PlannerConfig>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

/// A config with paths resolved against `base_dir`.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base_dir })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(seed) = o.seed {
            self.config.run.master_seed = seed;
        }
        if let Some(dir) = &o.out_dir {
            // Command-line paths are relative to the working directory.
            self.config.out_dir = std::path::absolute(dir).unwrap_or_else(|_| dir.clone());
        }
        self
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve_path(&self.config.out_dir)
    }

    /// Builds the functional, applies the planner and validates the run.
    pub fn resolve(&self) -> Result<Experiment> {
        let c = &self.config;
        let mut run = c.run.clone();
        let functional = match &c.functional {
            FunctionalConfig::Quadratic { lambda_v, alpha } => {
                FunctionalSpec::Pairwise(PairwiseSpec::quadratic(*lambda_v, *alpha, run.sigma, run.dim)?)
            }
            FunctionalConfig::Mfnn {
                dataset,
                amplitude,
                lambda,
                radius,
            } => {
                let path = self.resolve_path(dataset);
                if !path.is_file() {
                    return Err(Error::Config(format!("dataset {} does not exist", path.display())));
                }
                let data = Dataset::from_csv_path(&path, *radius)?;
                FunctionalSpec::Mfnn(MfnnSpec::new(data, *amplitude, *lambda, run.sigma, *radius)?)
            }
        };
        run.check_functional(&functional)?;
        let plan = match &c.planner {
            Some(p) => {
                let plan = plan_for(p, &run, &functional)?;
                if p.apply {
                    run.eta = plan.eta;
                    run.steps = plan.steps;
                }
                Some(plan)
            }
            None => None,
        };
        run.validate_against(&functional)?;
        if c.oracle {
            let quadratic = functional.as_pairwise().and_then(PairwiseSpec::quadratic_coefficients);
            if quadratic.is_none() {
                return Err(Error::Config("oracle comparison needs a quadratic functional".into()));
            }
            if c.method == RunMethod::Vpsa && run.batch_size != 1 {
                return Err(Error::Config("oracle comparison needs batch_size = 1".into()));
            }
        }
        Ok(Experiment {
            functional,
            run,
            plan,
            method: c.method,
            diagnostics: c.diagnostics.clone(),
            oracle: c.oracle,
            out_dir: self.out_dir(),
        })
    }
}

fn initial_law(run: &RunConfig) -> Result<GaussianSummary> {
    GaussianSummary::isotropic(run.init_mean.clone(), run.init_scale * run.init_scale)
}

fn plan_for(p: &PlannerConfig, run: &RunConfig, functional: &FunctionalSpec) -> Result<SchedulePlan> {
    match functional {
        FunctionalSpec::Pairwise(spec) => {
            let exact = spec.quadratic_coefficients().is_some();
            let c_lsi = match p.c_lsi {
                Some(c) => c,
                None if exact => quadratic_lsi_constant(spec)?.c_lsi,
                None => return Err(Error::Config("planner needs c_lsi for a non-quadratic functional".into())),
            };
            let kl0 = match p.initial_gap {
                Some(g) => g,
                None if exact => kl_gaussian(&initial_law(run)?, &quadratic_stationary(spec)?)?,
                None => return Err(Error::Config("planner needs initial_gap for a non-quadratic functional".into())),
            };
            let (l_v, l_w) = spec.smoothness();
            plan_schedule_pairwise(
                PairwisePlanInputs {
                    c_lsi,
                    l_v,
                    l_w,
                    sigma: spec.sigma,
                    dim: spec.dim,
                    kl0,
                },
                p.epsilon,
                p.constants,
            )
        }
        FunctionalSpec::Mfnn(spec) => {
            let (Some(c_lsi), Some(e0)) = (p.c_lsi, p.initial_gap) else {
                return Err(Error::Config("the network planner needs c_lsi and initial_gap".into()));
            };
            let k = spec.constants;
            plan_schedule_mfnn(
                MfnnPlanInputs {
                    c_lsi,
                    l_u: k.drift_lipschitz(spec.lambda),
                    sigma: spec.sigma,
                    dim: spec.dim(),
                    e0,
                    m: k.m,
                    r: k.r,
                    b: k.b,
                },
                p.epsilon,
                p.constants,
            )
        }
    }
}

/// A resolved, validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub functional: FunctionalSpec,
    /// Run parameters after overrides and planning.
    pub run: RunConfig,
    pub plan: Option<SchedulePlan>,
    pub method: RunMethod,
    pub diagnostics: DiagnosticsConfig,
    pub oracle: bool,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    /// `KL(law(X_T) ‖ π)` of the exact law.
    pub final_kl: f64,
    /// `W₂(law(X_T), π)` of the exact law.
    pub final_w2: f64,
    /// `W₂` between a Gaussian fit of the final cloud and the exact law.
    /// The fit is an approximation of the empirical measure.
    pub fit_w2: f64,
    pub epsilon: Option<f64>,
    pub below_epsilon: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub config_hash: String,
    pub method: RunMethod,
    pub run: RunConfig,
    pub functional: serde_json::Value,
    pub plan: Option<SchedulePlan>,
    pub assumptions: Option<AssumptionReport>,
    pub final_record: Option<StepRecord>,
    pub total_evals: u64,
    pub predicted_evals: u64,
    pub oracle: Option<OracleSummary>,
    pub independence: Option<IndependenceReport>,
    pub unbiasedness: Option<UnbiasednessReport>,
    pub wall_time_secs: f64,
    pub finished_unix_secs: u64,
    pub files: Vec<String>,
}

/// Outputs of [`Experiment::execute`] before anything is written.
pub struct ExperimentResult {
    pub cloud: ParticleCloud,
    pub witness: Option<WitnessPath>,
    pub trace: DiagnosticsTrace,
    pub summary: ExperimentSummary,
}

impl Experiment {
    pub fn config_hash_hex(&self) -> String {
        hex::encode(config_hash(&self.run, &self.functional))
    }

    /// The log-Sobolev constant from the plan, or the exact one for the
    /// quadratic case.
    pub fn c_lsi(&self) -> Option<f64> {
        self.plan
            .map(|p| match p.inputs {
                PlanInputs::Pairwise(i) => i.c_lsi,
                PlanInputs::Mfnn(i) => i.c_lsi,
            })
            .or_else(|| {
                self.functional
                    .as_pairwise()
                    .and_then(|s| quadratic_lsi_constant(s).ok())
                    .map(|c| c.c_lsi)
            })
    }

    /// Exact laws at steps `0..=T` (quadratic only).
    fn oracle_laws(&self) -> Result<Vec<GaussianSummary>> {
        let spec = self.functional.as_pairwise().ok_or(Error::NotQuadratic)?;
        let moments = match self.method {
            RunMethod::Vpsa => vpsa_moments(&self.run, spec)?,
            RunMethod::Pmkv => pmkv_moments(&self.run, spec)?,
        };
        moments.iter().map(|m| m.marginal()).collect()
    }

    pub fn execute(&self) -> Result<ExperimentResult> {
        let start = Instant::now();
        let n = self.run.particles as u64;
        let t = self.run.steps as u64;
        let (cloud, witness, mut trace, predicted) = match self.method {
            RunMethod::Vpsa => {
                let out = vpsa_run(&self.run, &self.functional)?;
                let predicted = eval_count(n, t, self.run.batch_size as u64);
                (out.cloud, Some(out.witness), out.trace, predicted)
            }
            RunMethod::Pmkv => {
                let out = pmkv_run(&self.run, &self.functional)?;
                (out.cloud, None, out.trace, pmkv_eval_count(&self.functional, n, t))
            }
        };

        let oracle = if self.oracle {
            let spec = self.functional.as_pairwise().ok_or(Error::NotQuadratic)?;
            let pi = quadratic_stationary(spec)?;
            let laws = self.oracle_laws()?;
            for r in &mut trace.records {
                r.oracle_kl = Some(kl_gaussian(&laws[r.step], &pi)?);
                r.oracle_w2 = Some(w2_gaussian(&laws[r.step], &pi)?);
            }
            let last = &laws[self.run.steps];
            let final_kl = kl_gaussian(last, &pi)?;
            let fit_w2 = if cloud.len() >= 2 {
                w2_gaussian(&GaussianSummary::fit(&cloud)?, last)?
            } else {
                f64::NAN
            };
            let epsilon = self.plan.map(|p| p.epsilon);
            Some(OracleSummary {
                final_kl,
                final_w2: w2_gaussian(last, &pi)?,
                fit_w2,
                epsilon,
                below_epsilon: epsilon.map(|e| final_kl <= e),
            })
        } else {
            None
        };

        let assumptions = self
            .diagnostics
            .assumptions
            .then(|| check_assumptions(&self.functional, self.c_lsi()));

        let independence = match (self.diagnostics.independence_repeats, &witness) {
            (Some(repeats), Some(w)) => Some(independence_diagnostic(&cloud, Some(w), &self.run, &self.functional, repeats)?),
            (Some(_), None) => {
                return Err(Error::Config("the independence test applies to vpsa runs only".into()));
            }
            _ => None,
        };

        let unbiasedness = match self.diagnostics.unbiasedness_draws {
            Some(draws) if !cloud.is_empty() => {
                let probe = cloud.mean()?;
                Some(unbiasedness_test(probe.as_slice(), &self.functional, &cloud, draws, self.run.master_seed)?)
            }
            _ => None,
        };

        let summary = ExperimentSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            config_hash: self.config_hash_hex(),
            method: self.method,
            run: self.run.clone(),
            functional: self.functional.descriptor(),
            plan: self.plan,
            assumptions,
            final_record: trace.last().cloned(),
            total_evals: trace.total_evals,
            predicted_evals: predicted,
            oracle,
            independence,
            unbiasedness,
            wall_time_secs: start.elapsed().as_secs_f64(),
            finished_unix_secs: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            files: Vec::new(),
        };
        Ok(ExperimentResult {
            cloud,
            witness,
            trace,
            summary,
        })
    }

    /// Writes `trace.csv`, `cloud.csv`, `witness.bin` (virtual particle runs)
    /// and `summary.json` into the output directory.
    pub fn write(&self, result: &mut ExperimentResult) -> Result<()> {
        let dir = &self.out_dir;
        fs::create_dir_all(dir)?;
        let hash = self.config_hash_hex();
        let mut files = vec!["trace.csv".to_string(), "cloud.csv".to_string()];
        write_trace_csv(
            BufWriter::new(File::create(dir.join("trace.csv"))?),
            &result.trace,
            self.functional.energy_labels(),
            &hash,
        )?;
        save_cloud_csv(&dir.join("cloud.csv"), &result.cloud, &hash)?;
        if let Some(w) = &result.witness {
            w.save(&dir.join("witness.bin"))?;
            files.push("witness.bin".into());
        }
        files.push("summary.json".into());
        result.summary.files = files;
        let f = BufWriter::new(File::create(dir.join("summary.json"))?);
        serde_json::to_writer_pretty(f, &result.summary)?;
        Ok(())
    }
}

/// Loads, runs and writes an experiment.
pub fn run_experiment(config_path: &Path, overrides: &Overrides) -> Result<ExperimentSummary> {
    let experiment = LoadedConfig::from_path(config_path)?.with_overrides(overrides).resolve()?;
    let mut result = experiment.execute()?;
    experiment.write(&mut result)?;
    Ok(result.summary)
}

/// Process exit code for an error: 2 for configuration problems, 3 for
/// divergence, 4 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => 3,
        Error::Io(_) | Error::Csv(_) => 4,
        _ => 2,
    }
}
