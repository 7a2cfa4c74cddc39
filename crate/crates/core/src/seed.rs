//! Derivation of per-module seeds from the single run seed.

use sha2::{Digest, Sha256};

/// Stable 64-bit seed for `module`, derived from the run seed by hashing.
pub fn derive(seed: u64, module: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(module.as_bytes());
    let out = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&out[..8]);
    u64::from_le_bytes(bytes)
}
