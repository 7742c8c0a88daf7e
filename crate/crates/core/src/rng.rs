//! Seed derivation. Every random decision in the crate draws from a
//! [`ChaCha8Rng`] whose seed is derived from the run seed plus a purpose tag,
//! so independent consumers never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a list of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

pub fn rng_for(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

/// Purpose tags.
pub mod tag {
    pub const SYNTHETIC: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const INIT: u64 = 3;
    pub const PRETRAIN: u64 = 4;
    pub const BATCH: u64 = 5;
    pub const CENTERS: u64 = 6;
    pub const SAMPLER: u64 = 7;
    pub const MEMBER: u64 = 8;
}
