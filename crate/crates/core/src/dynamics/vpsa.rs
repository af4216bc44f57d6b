//! The virtual particle stochastic approximation.
//!
//! Real particles `X^{(i)}` and a triangular array of virtual particles
//! `Y^{(j)}`, `j = 0..=T`, all start i.i.d. from `μ₀`. At step `k` the
//! virtual particle `Y_k^{(k)}` is frozen and serves as the witness: every
//! real particle and every still-live virtual particle `j > k` moves by
//!
//! ```text
//! x ← x + η Ĝ(x, Y_k^{(k)}, ξ_k) + σ√η Z
//! ```
//!
//! with its own Gaussian increment and one shared `ξ_k` per step. With batch
//! size `B > 1` there are `B` independent virtual arrays and `Ĝ` is averaged
//! over the `B` witnesses.

use rayon::prelude::*;

use super::trace::{DiagnosticsTrace, Method, Recorder};
use super::witness::WitnessPath;
use crate::cloud::{ParticleCloud, ParticleKind};
use crate::config::{config_hash, RunConfig};
use crate::error::{Error, Result};
use crate::functional::{EstimatorContract, FunctionalSpec, Xi};
use crate::rng::{NoiseStream, StreamId};

/// Coordinates beyond this magnitude abort the run.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Estimator invocations of a run: `B·n·T + B²·T(T+1)/2`.
pub fn eval_count(n: u64, steps: u64, batch: u64) -> u64 {
    batch * n * steps + batch * batch * steps * (steps + 1) / 2
}

#[derive(Clone, Debug)]
pub struct VpsaOutput {
    pub cloud: ParticleCloud,
    pub witness: WitnessPath,
    pub trace: DiagnosticsTrace,
}

#[derive(Clone, Debug)]
pub struct ReplayOutput {
    pub cloud: ParticleCloud,
    pub evals: u64,
}

/// The per-particle update map shared by real, virtual and replayed particles.
pub(crate) struct Kernel<'a> {
    functional: &'a FunctionalSpec,
    eta: f64,
    noise_scale: f64,
    dim: usize,
    batch: usize,
}

struct Scratch {
    noise: Vec<f64>,
    acc: Vec<f64>,
    est: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            noise: vec![0.0; d],
            acc: vec![0.0; d],
            est: vec![0.0; d],
            tmp: vec![0.0; d],
        }
    }
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(config: &RunConfig, functional: &'a FunctionalSpec) -> Self {
        Self {
            functional,
            eta: config.eta,
            noise_scale: config.sigma * config.eta.sqrt(),
            dim: config.dim,
            batch: config.batch_size,
        }
    }

    /// One update of `x` in place given the concatenated witnesses.
    /// Returns the number of estimator calls.
    #[inline]
    fn advance(&self, x: &mut [f64], witnesses: &[f64], xi: Xi, s: &mut Scratch) -> u64 {
        let d = self.dim;
        s.acc.fill(0.0);
        for w in witnesses.chunks_exact(d) {
            self.functional.estimate_into(x, w, xi, &mut s.est, &mut s.tmp);
            for (a, e) in s.acc.iter_mut().zip(&s.est) {
                *a += e;
            }
        }
        let inv_batch = self.batch as f64;
        for ((xi, a), z) in x.iter_mut().zip(&s.acc).zip(&s.noise) {
            *xi = *xi + self.eta * (a / inv_batch) + self.noise_scale * z;
        }
        self.batch as u64
    }

    /// Advances every particle of `positions` by one step; particle `i` draws
    /// its increment from `streams[i]`.
    pub(crate) fn advance_all(
        &self,
        positions: &mut [f64],
        streams: &[NoiseStream],
        witnesses: &[f64],
        xi: Xi,
        step: usize,
        entity: &'static str,
    ) -> Result<u64> {
        let d = self.dim;
        positions
            .par_chunks_mut(d)
            .zip(streams.par_iter())
            .enumerate()
            .map_init(
                || Scratch::new(d),
                |s, (i, (x, stream))| {
                    stream.fill_step(step, &mut s.noise);
                    let calls = self.advance(x, witnesses, xi, s);
                    if finite_and_bounded(x) {
                        Ok(calls)
                    } else {
                        Err(Error::Divergence { step, entity, index: i })
                    }
                },
            )
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }
}

#[inline]
pub(crate) fn finite_and_bounded(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND)
}

/// Draws from `μ₀ = N(init_mean, init_scale² I)` using each stream's initial slot.
pub(crate) fn initial_positions(config: &RunConfig, streams: &[NoiseStream]) -> Vec<f64> {
    let d = config.dim;
    let mut out = vec![0.0; streams.len() * d];
    out.par_chunks_mut(d).zip(streams.par_iter()).for_each(|(x, stream)| {
        stream.fill_initial(x);
        for (v, m) in x.iter_mut().zip(&config.init_mean) {
            *v = m + config.init_scale * *v;
        }
    });
    out
}

pub(crate) fn real_streams(seed: u64, ids: impl Iterator<Item = u64>) -> Vec<NoiseStream> {
    ids.map(|i| NoiseStream::new(seed, StreamId::real(i))).collect()
}

/// Runs the virtual particle scheme with real particle `i` on noise stream `i`.
pub fn vpsa_run(config: &RunConfig, functional: &FunctionalSpec) -> Result<VpsaOutput> {
    let ids: Vec<u64> = (0..config.particles as u64).collect();
    vpsa_run_with_streams(config, functional, &ids)
}

/// Like [`vpsa_run`] but real particle `i` draws from noise stream
/// `stream_ids[i]`. Permuting the ids permutes the output; repeating an id
/// duplicates a particle.
pub fn vpsa_run_with_streams(config: &RunConfig, functional: &FunctionalSpec, stream_ids: &[u64]) -> Result<VpsaOutput> {
    config.validate_against(functional)?;
    if stream_ids.len() != config.particles {
        return Err(Error::Config(format!(
            "{} stream ids for {} particles",
            stream_ids.len(),
            config.particles
        )));
    }
    let d = config.dim;
    let t = config.steps;
    let b = config.batch_size;
    let seed = config.master_seed;
    let kernel = Kernel::new(config, functional);

    let xi_stream = NoiseStream::new(seed, StreamId::estimator());
    let xi: Vec<Xi> = (0..t).map(|k| functional.sample_xi(&mut xi_stream.step(k))).collect();

    // Virtual array `a` occupies `virtuals[a·(T+1)·d .. (a+1)·(T+1)·d]`.
    let virtual_streams: Vec<NoiseStream> = (0..b as u32)
        .flat_map(|a| (0..=t as u64).map(move |j| NoiseStream::new(seed, StreamId::virtual_particle(a, j))))
        .collect();
    let mut virtuals = initial_positions(config, &virtual_streams);
    let reals_streams = real_streams(seed, stream_ids.iter().copied());
    let mut reals = initial_positions(config, &reals_streams);

    let row_width = b * d;
    let mut diagonal = Vec::with_capacity((t + 1) * row_width);
    push_row(&mut diagonal, &virtuals, 0, t, d, b);

    let mut recorder = Recorder::new(Method::Vpsa, functional, t, config.trace_every, config.trace_energy);
    let mut evals = 0u64;
    recorder.observe(0, evals, &reals, d)?;

    for k in 0..t {
        let row = diagonal[k * row_width..(k + 1) * row_width].to_vec();
        for a in 0..b {
            let block = &mut virtuals[a * (t + 1) * d..(a + 1) * (t + 1) * d];
            let live = &mut block[(k + 1) * d..];
            let streams = &virtual_streams[a * (t + 1) + k + 1..(a + 1) * (t + 1)];
            evals += kernel
                .advance_all(live, streams, &row, xi[k], k, "virtual")
                .map_err(|e| offset_index(e, k + 1))?;
        }
        evals += kernel.advance_all(&mut reals, &reals_streams, &row, xi[k], k, "real")?;
        push_row(&mut diagonal, &virtuals, k + 1, t, d, b);
        recorder.observe(k + 1, evals, &reals, d)?;
    }

    let witness = WitnessPath {
        dim: d,
        steps: t,
        batch: b,
        diagonal,
        xi,
        master_seed: seed,
        config_hash: config_hash(config, functional),
    };
    Ok(VpsaOutput {
        cloud: ParticleCloud::from_raw(d, reals, t, ParticleKind::Real),
        witness,
        trace: recorder.finish(),
    })
}

fn offset_index(e: Error, offset: usize) -> Error {
    match e {
        Error::Divergence { step, entity, index } => Error::Divergence {
            step,
            entity,
            index: index + offset,
        },
        other => other,
    }
}

fn push_row(diagonal: &mut Vec<f64>, virtuals: &[f64], k: usize, t: usize, d: usize, b: usize) {
    for a in 0..b {
        let start = (a * (t + 1) + k) * d;
        diagonal.extend_from_slice(&virtuals[start..start + d]);
    }
}

/// A single update `x + η Ĝ(x, witness, ξ) + σ√η·noise`. With batch size
/// `B`, `witness` holds the `B` witnesses back to back.
pub fn vpsa_step(
    x: &[f64],
    witness: &[f64],
    xi: Xi,
    config: &RunConfig,
    functional: &FunctionalSpec,
    noise: &[f64],
) -> Result<Vec<f64>> {
    config.validate_shape()?;
    config.check_functional(functional)?;
    let d = config.dim;
    for (len, expected) in [(x.len(), d), (witness.len(), d * config.batch_size), (noise.len(), d)] {
        if len != expected {
            return Err(Error::Dimension { expected, got: len });
        }
    }
    if !functional.accepts_xi(xi) {
        return Err(Error::Config(format!("estimator draw {xi:?} is invalid for this functional")));
    }
    let kernel = Kernel::new(config, functional);
    let mut s = Scratch::new(d);
    s.noise.copy_from_slice(noise);
    let mut out = x.to_vec();
    kernel.advance(&mut out, witness, xi, &mut s);
    Ok(out)
}

/// Draws `n_extra` fresh samples from the conditional law fixed by `witness`.
/// Replayed particle `i` uses real-particle noise stream `seed_offset + i`,
/// so `seed_offset = 0` reproduces the original run's particles.
pub fn replay_from_witness(
    witness: &WitnessPath,
    n_extra: usize,
    config: &RunConfig,
    functional: &FunctionalSpec,
    seed_offset: u64,
) -> Result<ReplayOutput> {
    config.validate_against(functional)?;
    witness.check_shape()?;
    let expected = config_hash(config, functional);
    if witness.config_hash != expected {
        return Err(Error::HashMismatch {
            witness: witness.config_hash_hex(),
            expected: hex::encode(expected),
        });
    }
    if witness.dim != config.dim || witness.steps != config.steps || witness.batch != config.batch_size {
        return Err(Error::Format("witness shape disagrees with the run configuration".into()));
    }
    if let Some(bad) = witness.xi.iter().find(|xi| !functional.accepts_xi(**xi)) {
        return Err(Error::Format(format!("estimator draw {bad:?} is invalid for this functional")));
    }
    let streams = real_streams(config.master_seed, (0..n_extra as u64).map(|i| seed_offset + i));
    let mut reals = initial_positions(config, &streams);
    let kernel = Kernel::new(config, functional);
    let mut evals = 0;
    for k in 0..witness.steps {
        evals += kernel.advance_all(&mut reals, &streams, witness.row(k), witness.xi[k], k, "replayed")?;
    }
    Ok(ReplayOutput {
        cloud: ParticleCloud::from_raw(config.dim, reals, witness.steps, ParticleKind::Real),
        evals,
    })
}
