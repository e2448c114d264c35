//! Shared helpers: stable fingerprints, seed derivation, atomic file writes.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex-encoded SHA-256 truncated to 16 chars; stable across runs and platforms.
pub fn fingerprint(payload: &str) -> String {
    let digest = Sha256::digest(payload.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Derives a child RNG seed from a parent seed and a label.
///
/// Used so every training day / grid config gets its own reproducible
/// stream regardless of evaluation order.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Write-temp-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Floor of `numerator / denominator` tolerant of binary representation of
/// decimal prices: 28365 / 94.55 must give 300, not 299.
pub fn floor_units(numerator: f64, denominator: f64) -> u64 {
    let q = numerator / denominator;
    if q < 0.0 {
        return 0;
    }
    let nearest = q.round();
    if (q - nearest).abs() < 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        q.floor() as u64
    }
}
