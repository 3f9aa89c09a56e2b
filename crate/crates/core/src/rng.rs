//! Seeding conventions.
//!
//! All randomness comes from [`ChaCha8Rng`] streams. A stream is identified by a
//! 64-bit seed; sub-streams are derived by XOR-ing the parent seed with either an
//! index (per tree, per restart) or the FNV-1a hash of a stage label.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-stream for an integer index, e.g. a tree number.
pub fn indexed(seed: u64, index: u64) -> u64 {
    seed ^ index
}

/// Sub-stream for a named stage.
pub fn labelled(seed: u64, label: &str) -> u64 {
    seed ^ fnv1a(label.as_bytes())
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
