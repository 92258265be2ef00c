//! Config hashing shared by every file the tools write.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// SHA-256 of the compact JSON form of `config`. Struct fields serialize in
/// declaration order, so equal configs hash equally.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new<T: Serialize>(config: &T, seed: u64) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(config),
            seed,
        }
    }
}
