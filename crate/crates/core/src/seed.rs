//! Deterministic seed derivation.
//!
//! Every stochastic stage derives its own seed from the run's root seed and a
//! stage label, so sub-runs are reproducible in isolation and independent of
//! execution order (including parallel execution). The derivation is a SHA-256
//! hash, stable across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `root` and a stage label.
pub fn derive_seed(root: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Seeded RNG used throughout the crate. ChaCha keeps the stream identical
/// across platforms and compiler versions.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        let a = derive_seed(42, "transcoder/init");
        let b = derive_seed(42, "transcoder/init");
        let c = derive_seed(42, "transcoder/batches");
        let d = derive_seed(43, "transcoder/init");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
