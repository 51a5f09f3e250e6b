//! Summary encodings: canonical JSON for the control plane and a compact
//! little-endian binary form for aggregator links.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CoreError, Result};

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("summaries serialize to JSON")
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CoreError::Encoding(e.to_string()))
}

/// Fixed-width little-endian integers with `u64` length prefixes.
pub fn to_binary<T: Serialize>(value: &T) -> Vec<u8> {
    bincode::serialize(value).expect("summaries serialize to binary")
}

pub fn from_binary<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    bincode::deserialize(bytes).map_err(|e| CoreError::Encoding(e.to_string()))
}
