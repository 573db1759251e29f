//! Seed derivation for reproducible, scheduler-independent replications.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit seed and a
//! 64-bit stream id, so any replication can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed together with an ordered list of coordinates
/// (sample size, replication index, ...) into a child seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = mix64(master.wrapping_add(GOLDEN));
    for (k, &p) in parts.iter().enumerate() {
        h = mix64(h ^ mix64(p.wrapping_add(GOLDEN.wrapping_mul(k as u64 + 2))));
    }
    h
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for replication `rep` of sample size `n` under `master`.
pub fn replication_rng(master: u64, n: usize, rep: usize) -> StreamRng {
    stream_rng(derive_seed(master, &[n as u64, rep as u64]), 0)
}
