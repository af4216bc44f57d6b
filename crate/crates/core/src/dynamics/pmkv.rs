//! Interacting-particle baseline: every particle feels the exact gradient
//! against the empirical measure of the whole cloud at the previous step.
//!
//! Cost is counted in kernel evaluations: `n²` interaction gradients per step
//! for pairwise energies, and `2nm` activation evaluations per step for the
//! network (`nm` to form the predictions, `nm` for the per-particle gradients).

use rayon::prelude::*;

use super::trace::{DiagnosticsTrace, Method, Recorder};
use super::vpsa::{finite_and_bounded, initial_positions, real_streams};
use crate::cloud::{ParticleCloud, ParticleKind};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::functional::FunctionalSpec;

#[derive(Clone, Debug)]
pub struct PmkvOutput {
    pub cloud: ParticleCloud,
    pub trace: DiagnosticsTrace,
}

/// Kernel evaluations of a baseline run.
pub fn pmkv_eval_count(functional: &FunctionalSpec, n: u64, steps: u64) -> u64 {
    match functional {
        FunctionalSpec::Pairwise(_) => n * n * steps,
        FunctionalSpec::Mfnn(m) => 2 * n * m.len() as u64 * steps,
    }
}

/// `X ← X − η ∇F(X, μ̂_k) + σ√η Z`. Particles start from the same draws as
/// the real particles of [`super::vpsa_run`] under the same seed.
pub fn pmkv_run(config: &RunConfig, functional: &FunctionalSpec) -> Result<PmkvOutput> {
    config.validate_against(functional)?;
    if config.particles == 0 {
        return Err(Error::Config("the particle baseline needs at least one particle".into()));
    }
    let d = config.dim;
    let n = config.particles;
    let streams = real_streams(config.master_seed, 0..n as u64);
    let mut cloud = initial_positions(config, &streams);
    let noise_scale = config.sigma * config.eta.sqrt();

    let mut recorder = Recorder::new(Method::Pmkv, functional, config.steps, config.trace_every, config.trace_energy);
    let mut evals = 0u64;
    recorder.observe(0, evals, &cloud, d)?;
    for k in 0..config.steps {
        let snapshot = cloud.clone();
        let ctx = functional.drift_context(&snapshot);
        evals += functional.context_cost(n);
        evals += cloud
            .par_chunks_mut(d)
            .zip(streams.par_iter())
            .enumerate()
            .map_init(
                || (vec![0.0; d], vec![0.0; d]),
                |(grad, noise), (i, (x, stream))| {
                    let cost = functional.exact_gradient_with(&ctx, x, grad);
                    stream.fill_step(k, noise);
                    for ((v, g), z) in x.iter_mut().zip(grad.iter()).zip(noise.iter()) {
                        *v = *v - config.eta * g + noise_scale * z;
                    }
                    if finite_and_bounded(x) {
                        Ok(cost)
                    } else {
                        Err(Error::Divergence {
                            step: k,
                            entity: "baseline",
                            index: i,
                        })
                    }
                },
            )
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        recorder.observe(k + 1, evals, &cloud, d)?;
    }
    Ok(PmkvOutput {
        cloud: ParticleCloud::from_raw(d, cloud, config.steps, ParticleKind::Real),
        trace: recorder.finish(),
    })
}
