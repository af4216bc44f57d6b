use std::path::Path;

use super::experiment::{LoadedConfig, Overrides};
use super::output::save_cloud_csv;
use crate::cloud::ParticleCloud;
use crate::dynamics::{replay_from_witness, WitnessPath};
use crate::error::Result;

/// Draws `n_extra` samples from a stored witness path and writes them as a
/// cloud CSV. The config (with the same seed override as the original run)
/// must hash to the witness's config hash.
pub fn resample(
    config_path: &Path,
    overrides: &Overrides,
    witness_path: &Path,
    n_extra: usize,
    seed_offset: u64,
    out: &Path,
) -> Result<ParticleCloud> {
    let experiment = LoadedConfig::from_path(config_path)?.with_overrides(overrides).resolve()?;
    let witness = WitnessPath::load(witness_path)?;
    let replay = replay_from_witness(&witness, n_extra, &experiment.run, &experiment.functional, seed_offset)?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_cloud_csv(out, &replay.cloud, &witness.config_hash_hex())?;
    Ok(replay.cloud)
}
