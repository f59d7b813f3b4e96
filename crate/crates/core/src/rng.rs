//! Seeded random streams.
//!
//! Every sampler takes an explicit 64-bit seed and builds its own
//! xoshiro256++ generator, so results depend only on the seed.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a stream index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
