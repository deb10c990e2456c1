//! Content digests for fingerprints and manifests.

use sha2::{Digest, Sha256};

use crate::features::FeatureMatrix;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// SHA-256 over a feature matrix's shape, flag and raw values.
pub fn features_digest(features: &FeatureMatrix) -> String {
    let mut h = Sha256::new();
    h.update((features.n() as u64).to_le_bytes());
    h.update((features.d() as u64).to_le_bytes());
    h.update([u8::from(features.is_normalized())]);
    for v in features.values() {
        h.update(v.to_le_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
