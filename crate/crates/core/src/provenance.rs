//! Canonical JSON and configuration hashes.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Compact JSON with object keys sorted, independent of field order.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // `serde_json::Map` is a `BTreeMap` without the `preserve_order` feature.
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

/// SHA-256 of [`canonical_json`], hex encoded.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let s = canonical_json(value).unwrap_or_default();
    hex::encode(Sha256::digest(s.as_bytes()))
}
