//! Counter-based seed derivation.
//!
//! Every random stream is keyed by the master seed plus a path of counters
//! (domain tag, cell index, batch index, ...). Each step of the path is mixed
//! in with the SplitMix64 finalizer, and the result seeds a ChaCha8 generator.
//! Streams with different paths are independent for practical purposes, and a
//! stream's content never depends on which other streams were drawn or in
//! which order, so work split across threads reproduces the sequential result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for the top-level paths.
pub mod domain {
    pub const CELL: u64 = 0x4345_4c4c; // "CELL"
    pub const PAIRS: u64 = 0x5041_4952; // "PAIR"
    pub const BATCH: u64 = 0x4241_5443; // "BATC"
    pub const DARK: u64 = 0x4441_524b; // "DARK"
    pub const FRINGE: u64 = 0x4652_4e47; // "FRNG"
    pub const BOOTSTRAP: u64 = 0x424f_4f54; // "BOOT"
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the stream at `path` below `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, &step| mix64(acc ^ mix64(step)))
}

/// Generator for the stream at `path` below `master`.
pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
