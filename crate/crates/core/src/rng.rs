//! Seeded RNG substreams.
//!
//! Every randomized operation draws from a ChaCha8 stream identified by
//! (seed, name). Distinct names give statistically independent streams for
//! the same user-facing seed, so adding a new randomized step never perturbs
//! existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a. Stable across platforms; used only to map substream names
/// to ChaCha stream ids, not for anything security-sensitive.
fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A named substream of the master seed.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name));
    rng
}
