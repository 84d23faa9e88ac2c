pub mod analysis;
pub mod config;
pub mod context;
pub mod dataset;
pub mod evaluator;
pub mod gateway;
pub mod log_extractor;
pub mod parallel;
pub mod prompt;
pub mod rules;
pub mod source_model;
pub mod taxonomy;

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
