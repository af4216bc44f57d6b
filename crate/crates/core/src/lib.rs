//! Virtual particle stochastic approximation for mean-field Langevin dynamics.
//!
//! The engine samples from the minimizer of an entropy-regularized energy
//! `F(μ) + (σ²/2)·H(μ)` by simulating the associated McKean–Vlasov diffusion.
//! Instead of an interacting particle system, each real particle sees the law
//! of the process only through one "witness" particle per step, taken from a
//! triangular array of virtual particles. Conditioned on the witness path the
//! real particles are i.i.d., the total cost is `O(nT + T²)` estimator calls,
//! and the stored witness path can be replayed to draw more samples later.
//!
//! Modules:
//! - [`functional`]: energies, unbiased drift estimators, exact empirical gradients.
//! - [`dynamics`]: the virtual particle run, the interacting-particle baseline,
//!   witness paths and replay.
//! - [`oracle`]: Gaussian closed forms, exact moment recursions for the
//!   quadratic case, schedule planners and statistical diagnostics.
//! - [`harness`]: experiment configs, file outputs, complexity benchmark.

pub mod cloud;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod functional;
pub mod harness;
pub mod oracle;
pub mod rng;

pub use cloud::{ParticleCloud, ParticleKind};
pub use config::{config_hash, RunConfig};
pub use dynamics::{
    eval_count, pmkv_run, replay_from_witness, vpsa_run, vpsa_run_with_streams, vpsa_step,
    DiagnosticsTrace, PmkvOutput, ReplayOutput, StepRecord, VpsaOutput, WitnessPath,
};
pub use error::{Error, Result};
pub use functional::{
    check_assumptions, AssumptionReport, Dataset, Energy, EstimatorContract, FunctionalSpec,
    MfnnSpec, PairwiseSpec, Potential, SmoothPotential, Xi,
};
pub use oracle::{
    affine_recursion_oracle, kl_gaussian, plan_schedule_mfnn, plan_schedule_pairwise,
    quadratic_lsi_constant, quadratic_stationary, w2_gaussian, GaussianSummary, SchedulePlan,
};
pub use rng::{EntityKind, NoiseStream, StreamId};
