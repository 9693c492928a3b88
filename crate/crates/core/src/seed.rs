//! Deterministic RNG streams.
//!
//! Every random choice in the pipeline draws from a ChaCha stream keyed by
//! the master seed plus a small tuple of tags (run index, relation id,
//! purpose). Distinct tuples give independent streams, so per-relation work
//! can run on any schedule without changing results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes; part of the RNG key, so variant order is load-bearing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    SplitPositives,
    SampleNegatives,
    TrainGeneralized,
    TrainSpecialized,
    AblationAlpha,
    AblationSplit,
    TrainFactor,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::SplitPositives => 1,
            Purpose::SampleNegatives => 2,
            Purpose::TrainGeneralized => 3,
            Purpose::TrainSpecialized => 4,
            Purpose::AblationAlpha => 5,
            Purpose::AblationSplit => 6,
            Purpose::TrainFactor => 7,
        }
    }
}

/// RNG for the stream `(master, run, relation, purpose)`.
///
/// The tuple is written directly into the ChaCha key, so no mixing step is
/// needed for stream independence.
pub fn stream_rng(master: u64, run: u64, relation: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&run.to_le_bytes());
    key[16..24].copy_from_slice(&relation.to_le_bytes());
    key[24..32].copy_from_slice(&purpose.tag().to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derive a child seed for `(master, a, b)`, e.g. one seed per pipeline
/// run. The tag slot sits far above every `Purpose` tag, so derived seeds
/// never collide with purpose streams.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..32].copy_from_slice(&u64::MAX.to_le_bytes());
    ChaCha8Rng::from_seed(key).next_u64()
}
