//! Particle dynamics: the virtual particle scheme, the interacting-particle
//! baseline, witness paths and replay.
//!
//! Real particle `i` draws all of its randomness from the noise stream
//! labelled `(Real, i)`; virtual particle `j` of batch array `a` from
//! `(Virtual, a, j)`; the per-step estimator draw from `(Estimator, 0)`.
//! Real-particle updates within a step run in parallel, and because every
//! draw is addressed by label and step, the output does not depend on the
//! thread schedule.

mod pmkv;
mod trace;
mod vpsa;
mod witness;

pub use pmkv::{pmkv_eval_count, pmkv_run, PmkvOutput};
pub use trace::{DiagnosticsTrace, Method, StepRecord};
pub use vpsa::{
    eval_count, replay_from_witness, vpsa_run, vpsa_run_with_streams, vpsa_step, ReplayOutput, VpsaOutput,
    DIVERGENCE_BOUND,
};
pub use witness::{WitnessPath, WITNESS_FORMAT_VERSION};
