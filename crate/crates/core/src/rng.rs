//! Addressable noise streams.
//!
//! Every random draw in a run is addressed by `(master_seed, entity kind,
//! batch, entity index, slot)`. The slot is `0` for the initial draw from
//! the starting distribution and `k + 1` for the Gaussian increment used at
//! step `k`. A generator for any address can be built directly, so the draws
//! do not depend on the order in which particles are visited or on how the
//! work is split across threads.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which family of particles (or other consumer) owns a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Real,
    Virtual,
    /// Auxiliary estimator randomness, one draw per step.
    Estimator,
}

impl EntityKind {
    fn tag(self) -> u8 {
        match self {
            EntityKind::Real => 1,
            EntityKind::Virtual => 2,
            EntityKind::Estimator => 3,
        }
    }
}

/// Structured label of a stream under a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub kind: EntityKind,
    pub batch: u32,
    pub index: u64,
}

impl StreamId {
    pub fn real(index: u64) -> Self {
        Self {
            kind: EntityKind::Real,
            batch: 0,
            index,
        }
    }

    pub fn virtual_particle(batch: u32, index: u64) -> Self {
        Self {
            kind: EntityKind::Virtual,
            batch,
            index,
        }
    }

    pub fn estimator() -> Self {
        Self {
            kind: EntityKind::Estimator,
            batch: 0,
            index: 0,
        }
    }
}

/// A keyed family of generators, one per slot.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    master_seed: u64,
    id: StreamId,
    key: [u64; 4],
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl NoiseStream {
    pub fn new(master_seed: u64, id: StreamId) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"vpsa-noise-v1");
        hasher.update(master_seed.to_le_bytes());
        hasher.update([id.kind.tag()]);
        hasher.update(id.batch.to_le_bytes());
        hasher.update(id.index.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u64; 4];
        for (w, chunk) in key.iter_mut().zip(digest.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Self {
            master_seed,
            id,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Generator for an arbitrary slot.
    pub fn slot(&self, slot: u64) -> Xoshiro256PlusPlus {
        let salt = mix64(slot.wrapping_mul(GOLDEN) ^ 0x5EED);
        let mut seed = [0u8; 32];
        for (i, w) in self.key.iter().enumerate() {
            let word = mix64(w ^ salt.rotate_left(16 * i as u32) ^ (i as u64).wrapping_mul(GOLDEN));
            seed[8 * i..8 * i + 8].copy_from_slice(&word.to_le_bytes());
        }
        Xoshiro256PlusPlus::from_seed(seed)
    }

    /// Generator used for the draw from the initial distribution.
    pub fn initial(&self) -> Xoshiro256PlusPlus {
        self.slot(0)
    }

    /// Generator used for the increment at step `k`.
    pub fn step(&self, k: usize) -> Xoshiro256PlusPlus {
        self.slot(k as u64 + 1)
    }

    /// Fills `out` with standard normals for the initial draw.
    pub fn fill_initial(&self, out: &mut [f64]) {
        fill_normal(&mut self.initial(), out);
    }

    /// Fills `out` with the standard normal increment of step `k`.
    pub fn fill_step(&self, k: usize, out: &mut [f64]) {
        fill_normal(&mut self.step(k), out);
    }
}

pub(crate) fn fill_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}
