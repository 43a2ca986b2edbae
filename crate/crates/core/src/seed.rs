//! Splittable seed derivation. Every stochastic stream in the crate is keyed
//! by a 64-bit seed derived from a master seed plus stream coordinates, so
//! results never depend on generation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a sequence of stream coordinates.
pub fn derive(parent: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix64(parent ^ GOLDEN), |acc, &c| {
        mix64(acc.wrapping_add(GOLDEN).wrapping_add(mix64(c.wrapping_add(GOLDEN))))
    })
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// stream tags
pub(crate) const STREAM_PROGRAM: u64 = 0x5052_4f47; // "PROG"
pub(crate) const STREAM_SURFACE: u64 = 0x5355_5246; // "SURF"
