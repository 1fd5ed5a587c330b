//! Seeded, splittable random streams.
//!
//! Every consumer derives its own ChaCha stream from a root seed plus a
//! stream id, so results never depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs up to three small indices into a stream id.
pub fn stream_id(a: usize, b: usize, c: usize) -> u64 {
    debug_assert!(a < 1 << 16 && b < 1 << 16 && c < 1 << 32);
    ((a as u64) << 48) | ((b as u64) << 32) | (c as u64)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a named stage, e.g. `derive_seed(root, "subset")`.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(mix64(root), |acc, b| mix64(acc ^ u64::from(b)))
}
