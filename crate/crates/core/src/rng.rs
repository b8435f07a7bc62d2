// SPDX-License-Identifier: Apache-2.0

//! Seed derivation for per-item random streams.
//!
//! Every stochastic step draws from a `ChaCha8Rng` seeded by mixing the run
//! seed with the item's coordinates, so results never depend on the order in
//! which workers pick items up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with an ordered list of item coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn item_rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    seeded_rng(derive_seed(base, parts))
}

/// Round half up, the rounding rule used for every pixel count and colour.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}
