//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`], which produces the
//! same stream on every platform for a given seed. Independent consumers (trees
//! of a forest, folds of a cross-validation, stages of an experiment) get their
//! own seed through [`derive_seed`], so work can be scheduled on any number of
//! threads without changing results.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `base` and `tag` with the SplitMix64 finalizer.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
