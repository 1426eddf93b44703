//! Root-seed to stage-seed derivation.
//!
//! Every source of randomness in the toolkit draws from one root seed via a
//! named sub-seed, so a single knob reproduces an entire run.

use sha2::{Digest, Sha256};

/// Stable, platform-independent sub-seed for a named consumer.
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
