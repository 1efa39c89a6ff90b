//! Seed derivation.
//!
//! Every stochastic step takes its own 64-bit seed derived from a parent seed
//! and a list of labels: the first eight bytes (little endian) of
//! `SHA-256(parent.to_le_bytes() || label_1 || 0x1f || label_2 || 0x1f || ...)`.
//! Derived seeds depend only on the labels, never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from `parent` and an ordered list of labels.
pub fn derive_seed(parent: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    for label in labels {
        hasher.update(label.as_bytes());
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// The random generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
