//! Statistical checks on estimator and sampler output. Every report carries
//! its thresholds and a pass flag and serializes into a versioned document.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::config::RunConfig;
use crate::dynamics::{replay_from_witness, WitnessPath};
use crate::error::{Error, Result};
use crate::functional::{EstimatorContract, FunctionalSpec};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Wraps a report as `{"schema_version", "kind", "report"}`.
pub fn report_document<T: Serialize>(kind: &str, report: &T) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": kind,
        "report": serde_json::to_value(report)?,
    }))
}

/// Particles compared bit for bit against a replay from the witness.
const STRUCTURAL_HEAD: usize = 8;
/// Fraction of correlation statistics that must fall under the threshold.
const CORRELATION_COVERAGE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralCheck {
    pub checked: Vec<usize>,
    pub mismatches: Vec<usize>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCheck {
    pub lags: usize,
    pub statistics: usize,
    pub threshold: f64,
    pub max_abs_correlation: f64,
    pub fraction_below: f64,
    pub required_fraction: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub particles: usize,
    pub structural: StructuralCheck,
    /// Absent when the cloud is too small to form pairs.
    pub statistical: Option<CorrelationCheck>,
    pub passed: bool,
}

/// Checks that a cloud behaves as conditionally i.i.d. given its witness.
///
/// Structural: the first few particles and the last are regenerated from the
/// witness on their own noise streams and must match bit for bit.
/// Statistical: for lags `1..=repeats`, the sample correlation between
/// coordinate `a` of particle `i` and coordinate `b` of particle `i + lag`
/// (cyclically) must stay below `4/√n` for 95% of the `(lag, a, b)` triples.
pub fn independence_diagnostic(
    cloud: &ParticleCloud,
    witness: Option<&WitnessPath>,
    config: &RunConfig,
    functional: &FunctionalSpec,
    repeats: usize,
) -> Result<IndependenceReport> {
    let witness = witness.ok_or(Error::MissingWitness)?;
    if repeats < 2 {
        return Err(Error::Config(format!("repeats must be at least 2, got {repeats}")));
    }
    let n = cloud.len();
    let mut checked: Vec<usize> = (0..n.min(STRUCTURAL_HEAD)).collect();
    if n > STRUCTURAL_HEAD {
        checked.push(n - 1);
    }
    let mut mismatches = Vec::new();
    for &i in &checked {
        let replay = replay_from_witness(witness, 1, config, functional, i as u64)?;
        let same = replay
            .cloud
            .particle(0)
            .iter()
            .zip(cloud.particle(i))
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            mismatches.push(i);
        }
    }
    let structural = StructuralCheck {
        passed: mismatches.is_empty(),
        checked,
        mismatches,
    };
    let statistical = (n >= 3).then(|| correlation_check(cloud, repeats.min(n - 1)));
    let passed = structural.passed && statistical.as_ref().is_none_or(|s| s.passed);
    Ok(IndependenceReport {
        particles: n,
        structural,
        statistical,
        passed,
    })
}

fn correlation_check(cloud: &ParticleCloud, lags: usize) -> CorrelationCheck {
    let n = cloud.len();
    let d = cloud.dim();
    // Standardize each coordinate once.
    let mut z = vec![0.0; n * d];
    for a in 0..d {
        let mean = cloud.iter().map(|p| p[a]).sum::<f64>() / n as f64;
        let var = cloud.iter().map(|p| (p[a] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for (i, p) in cloud.iter().enumerate() {
            z[i * d + a] = if sd > 0.0 { (p[a] - mean) / sd } else { 0.0 };
        }
    }
    let threshold = 4.0 / (n as f64).sqrt();
    let mut below = 0usize;
    let mut total = 0usize;
    let mut max_abs: f64 = 0.0;
    for lag in 1..=lags {
        for a in 0..d {
            for b in 0..d {
                let r = (0..n).map(|i| z[i * d + a] * z[((i + lag) % n) * d + b]).sum::<f64>() / n as f64;
                max_abs = max_abs.max(r.abs());
                total += 1;
                if r.abs() < threshold {
                    below += 1;
                }
            }
        }
    }
    let fraction = below as f64 / total as f64;
    CorrelationCheck {
        lags,
        statistics: total,
        threshold,
        max_abs_correlation: max_abs,
        fraction_below: fraction,
        required_fraction: CORRELATION_COVERAGE,
        passed: fraction >= CORRELATION_COVERAGE,
    }
}

/// Relative tolerance of the finite-sum identity.
pub const UNBIASED_RTOL: f64 = 1e-12;
/// Monte-Carlo mean must lie within this many standard errors.
pub const UNBIASED_Z: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    /// `−∇` of the functional at the empirical measure.
    pub target: Vec<f64>,
    /// Estimator averaged over every `(y, ξ)` in the support.
    pub exact_mean: Vec<f64>,
    /// Per coordinate `|exact_mean − target| / scale`.
    pub exact_relative_error: Vec<f64>,
    pub exact_tolerance: f64,
    pub exact_passed: bool,
    pub draws: usize,
    pub mc_mean: Vec<f64>,
    pub mc_standard_error: Vec<f64>,
    pub mc_z: Vec<f64>,
    pub mc_z_threshold: f64,
    pub mc_passed: bool,
    pub passed: bool,
}

/// Tests `E[Ĝ(x, Y, ξ)] = −∇δF(μ̂)(x)` for `Y ∼ μ̂` (the cloud) and
/// `ξ ∼ ν`: exactly by summing over the finite support, and by Monte Carlo
/// with `draws` samples.
pub fn unbiasedness_test<F: EstimatorContract>(
    x: &[f64],
    functional: &F,
    cloud: &ParticleCloud,
    draws: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    let d = functional.dim();
    if x.len() != d {
        return Err(Error::Dimension { expected: d, got: x.len() });
    }
    let target: Vec<f64> = functional
        .exact_empirical_gradient(x, cloud)?
        .into_iter()
        .map(|g| -g)
        .collect();
    let support = functional.xi_support();
    let mut sum = vec![0.0; d];
    let mut scale: Vec<f64> = target.iter().map(|t| t.abs()).collect();
    for y in cloud.iter() {
        for &xi in &support {
            for (c, g) in functional.estimate(x, y, xi)?.into_iter().enumerate() {
                sum[c] += g;
                scale[c] = scale[c].max(g.abs());
            }
        }
    }
    let count = (cloud.len() * support.len()) as f64;
    let exact_mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let exact_relative_error: Vec<f64> = exact_mean
        .iter()
        .zip(&target)
        .zip(&scale)
        .map(|((m, t), s)| if *s > 0.0 { (m - t).abs() / s } else { (m - t).abs() })
        .collect();
    let exact_passed = exact_relative_error.iter().all(|e| *e <= UNBIASED_RTOL);

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for s in 0..draws {
        let y = cloud.particle(rng.random_range(0..cloud.len()));
        let xi = functional.sample_xi(&mut rng);
        for (c, g) in functional.estimate(x, y, xi)?.into_iter().enumerate() {
            let delta = g - mean[c];
            mean[c] += delta / (s + 1) as f64;
            m2[c] += delta * (g - mean[c]);
        }
    }
    let se: Vec<f64> = m2
        .iter()
        .map(|v| if draws > 1 { (v / (draws - 1) as f64 / draws as f64).sqrt() } else { f64::INFINITY })
        .collect();
    let mc_z: Vec<f64> = mean
        .iter()
        .zip(&target)
        .zip(&se)
        .zip(&scale)
        .map(|(((m, t), e), s)| {
            let dev = (m - t).abs();
            if *e > 0.0 {
                dev / e
            } else if dev <= UNBIASED_RTOL * s {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mc_passed = draws == 0 || mc_z.iter().all(|z| *z <= UNBIASED_Z);
    Ok(UnbiasednessReport {
        target,
        exact_mean,
        exact_relative_error,
        exact_tolerance: UNBIASED_RTOL,
        exact_passed,
        draws,
        mc_mean: mean,
        mc_standard_error: se,
        mc_z,
        mc_z_threshold: UNBIASED_Z,
        mc_passed,
        passed: exact_passed && mc_passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatioReport {
    pub batch: usize,
    pub draws: usize,
    /// `tr Cov(Ĝ₁)`.
    pub single_variance: f64,
    /// `tr Cov(Ĝ_B)`.
    pub batch_variance: f64,
    pub ratio: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn total_variance<F: EstimatorContract>(
    x: &[f64],
    functional: &F,
    population: &ParticleCloud,
    batch: usize,
    draws: usize,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<f64> {
    let d = functional.dim();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut acc = vec![0.0; d];
    for s in 0..draws {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let xi = functional.sample_xi(rng);
        for _ in 0..batch {
            let y = population.particle(rng.random_range(0..population.len()));
            for (a, g) in acc.iter_mut().zip(functional.estimate(x, y, xi)?) {
                *a += g;
            }
        }
        for c in 0..d {
            let g = acc[c] / batch as f64;
            let delta = g - mean[c];
            mean[c] += delta / (s + 1) as f64;
            m2[c] += delta * (g - mean[c]);
        }
    }
    Ok(m2.iter().sum::<f64>() / (draws - 1) as f64)
}

/// Compares `tr Cov(Ĝ_B)` with `tr Cov(Ĝ₁)/B`, where `Ĝ_B` averages the
/// estimator over `B` independent witnesses drawn from `population` with one
/// shared `ξ`. Passes when the ratio is within `tolerance` (relative) of `1/B`.
pub fn batch_variance_ratio<F: EstimatorContract>(
    x: &[f64],
    functional: &F,
    population: &ParticleCloud,
    batch: usize,
    draws: usize,
    tolerance: f64,
    seed: u64,
) -> Result<VarianceRatioReport> {
    if batch == 0 || draws < 2 {
        return Err(Error::Config("batch must be positive and draws at least 2".into()));
    }
    if population.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if x.len() != functional.dim() {
        return Err(Error::Dimension {
            expected: functional.dim(),
            got: x.len(),
        });
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let single = total_variance(x, functional, population, 1, draws, &mut rng)?;
    let batched = total_variance(x, functional, population, batch, draws, &mut rng)?;
    let ratio = batched / single;
    let expected = 1.0 / batch as f64;
    let relative_error = (ratio - expected).abs() / expected;
    Ok(VarianceRatioReport {
        batch,
        draws,
        single_variance: single,
        batch_variance: batched,
        ratio,
        expected,
        relative_error,
        tolerance,
        passed: relative_error <= tolerance,
    })
}
