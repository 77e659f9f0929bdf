//! Seeded random number generation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. ChaCha output and the `seed_from_u64`
//! expansion are fixed by `rand_core`, so a `(seed, algorithm)` pair
//! reproduces the same stream on every platform.
//!
//! Independent replicas (Monte Carlo trials, sweep points) get their own
//! stream via [`sub_seed`], a SplitMix64 mix of the parent seed and the
//! replica index. Adding trials never perturbs the streams of earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN_GAMMA);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for replica `index` of a run seeded with `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(GOLDEN_GAMMA))
}
