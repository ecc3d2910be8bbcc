//! Seed derivation shared by every sampler in the crate.
//!
//! Each independent unit of randomness (a Monte Carlo run, an RR sample, a
//! live-edge world) gets its own generator seeded from `(master, index)`, so
//! results never depend on how work is scheduled across threads.

use rand::rngs::SmallRng;
use rand::SeedableRng;

/// SplitMix64 finalizer applied to `master` advanced by `index` golden-ratio steps.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(master: u64, index: u64) -> SmallRng {
    SmallRng::seed_from_u64(mix_seed(master, index))
}
