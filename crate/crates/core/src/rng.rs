//! Seeded random streams. Every stochastic step in the crate draws from
//! xoshiro256++ seeded through SplitMix64, which is portable across
//! platforms.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

/// Recorded in dataset headers and checkpoints.
pub const RNG_NAME: &str = "xoshiro256++ (SplitMix64 seeding)";

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// `count` non-overlapping streams, stream `i` being the seeded generator
/// advanced by `i + 1` jumps of 2^128 steps.
pub fn substreams(seed: u64, count: usize) -> Vec<Rng> {
    let mut base = seeded(seed);
    (0..count)
        .map(|_| {
            base.jump();
            base.clone()
        })
        .collect()
}

/// Derives a child seed for a named purpose, so that different consumers
/// of one user-facing seed do not share a stream.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
