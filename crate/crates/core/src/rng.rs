//! Deterministic per-item random streams.
//!
//! Every sample, grid cell and training epoch draws from its own ChaCha
//! stream keyed by `(seed, index)`, so results do not depend on evaluation
//! order or on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// RNG for item `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index))
}

/// RNG for a named sub-purpose of item `index` (e.g. epoch shuffles per phase).
pub fn substream(seed: u64, domain: u64, index: u64) -> StreamRng {
    stream(stream_seed(seed, domain), index)
}
