//! Stable content hashes used for ids and cache keys.

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `prefix-` followed by the first 16 hex chars of the SHA-256 over the
/// parts, each part terminated by a 0x1f separator so that
/// `["ab", "c"]` and `["a", "bc"]` differ.
pub fn short_id(prefix: &str, parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let digest = hex::encode(h.finalize());
    format!("{prefix}-{}", &digest[..16])
}

/// Collapse runs of whitespace to a single space and trim.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
