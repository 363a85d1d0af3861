//! Seed handling. All randomness comes from ChaCha8 streams seeded with
//! 64-bit values; sub-seeds are derived from a master seed by a counter
//! scheme so any single trial can be replayed on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used everywhere in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for item `counter` of `stream` under `master`:
/// `splitmix64(splitmix64(master ^ splitmix64(stream)) + counter)`.
pub fn derive_seed(master: u64, stream: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(counter))
}
