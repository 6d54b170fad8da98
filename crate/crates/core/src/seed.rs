//! Stable seed derivation.
//!
//! Every random stream in the crate is spawned from a parent seed and a
//! label through [`derive`], so that results never depend on thread
//! scheduling or on the order in which streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an integer index.
pub fn derive(parent: u64, index: u64) -> u64 {
    mix(mix(parent) ^ index.rotate_left(17) ^ 0xA076_1D64_78BD_642F)
}

/// Derives a child seed from `parent` and a textual label.
pub fn derive_label(parent: u64, label: &str) -> u64 {
    // FNV-1a over the label bytes, then mixed with the parent.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive(parent, h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
