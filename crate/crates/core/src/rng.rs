//! Counter-based seed derivation.
//!
//! Every trial, worker or site draws from its own ChaCha stream whose seed is
//! a hash of the base seed and a path of counters. Results therefore do not
//! depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of stream counters.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(base), |acc, &c| {
        splitmix(acc ^ splitmix(c.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

/// A generator for the stream addressed by `path` under `base`.
pub fn stream(base: u64, path: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}
