//! Index-addressed random streams.
//!
//! Every random decision in the crate draws from a stream keyed by
//! `(master_seed, indices...)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of stream indices into a 64-bit key.
pub fn stream_key(master_seed: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(splitmix64(master_seed), |acc, &i| {
        splitmix64(acc ^ splitmix64(i.wrapping_add(GOLDEN)))
    })
}

/// Generator for the stream `(master_seed, indices...)`.
pub fn stream_rng(master_seed: u64, indices: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_key(master_seed, indices))
}
