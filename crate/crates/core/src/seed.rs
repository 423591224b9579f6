//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate is a ChaCha stream keyed by a
//! seed derived from a master seed plus a list of tags (episode index,
//! particle index, candidate index, ...). Results are therefore identical
//! regardless of execution order or thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain-separation tags. Keeping them in one place avoids accidental
/// stream collisions between subsystems.
pub mod salt {
    pub const PARTICLE_INIT: u64 = 0x01;
    pub const SHUFFLE: u64 = 0x02;
    pub const EPISODE: u64 = 0x03;
    pub const RESET: u64 = 0x04;
    pub const POLICY: u64 = 0x05;
    pub const STEP: u64 = 0x06;
    pub const NOISE: u64 = 0x07;
    pub const ROLLOUT: u64 = 0x08;
    pub const DIAG: u64 = 0x09;
    pub const HELDOUT: u64 = 0x0a;
    pub const EVAL: u64 = 0x0b;
    pub const PROBE: u64 = 0x0c;
}

/// SplitMix64 finalizer; good avalanche, cheap, stable.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and an ordered list of tags.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}

/// A ChaCha8 stream for the given derived seed.
pub fn rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tags))
}
