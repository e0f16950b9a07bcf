//! Deterministic seed derivation.
//!
//! Every component that needs randomness derives its own 64-bit seed from a
//! master seed and a `(tag, index)` pair. Derivation is a pure function, so
//! adding a new consumer (or a new seed to a sweep) never perturbs the
//! streams handed out to existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a; stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the seed for consumer `tag` number `index` under `master`.
pub fn derive(master: u64, tag: &str, index: u64) -> u64 {
    mix64(mix64(master ^ tag_hash(tag)).wrapping_add(mix64(index)))
}

/// An RNG stream for `(master, tag, index)`.
pub fn rng(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tag, index))
}
