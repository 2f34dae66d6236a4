//! Registry file: canonical JSON with a checksum over the registry payload.
//!
//! ```json
//! {"checksum": "<sha256 hex>", "format_version": 1, "registry": {...}}
//! ```
//!
//! Object keys are sorted at every level, units are ordered by id and edges
//! lexicographically, so equal pairs always produce identical bytes.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evolution::RegistryPair;

pub const FORMAT_VERSION: u64 = 1;

/// Load failures, each reported distinctly. A file that is not complete JSON
/// (for example a truncated write) cannot carry a verifiable checksum and is
/// reported as a checksum failure.
#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot access registry file: {0}")]
    Io(#[from] std::io::Error),
    #[error("registry checksum mismatch: {0}")]
    Checksum(String),
    #[error("registry format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("registry violates structural invariants: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    checksum: String,
    format_version: u64,
    registry: Value,
}

/// Canonical compact JSON of the pair; keys sorted by construction.
pub fn canonical_json(pair: &RegistryPair) -> String {
    let value = serde_json::to_value(pair).expect("registry pairs serialize");
    serde_json::to_string(&value).expect("json values serialize")
}

pub fn checksum(pair: &RegistryPair) -> String {
    hex::encode(Sha256::digest(canonical_json(pair).as_bytes()))
}

/// File contents for `pair`: pretty-printed and newline-terminated.
pub fn encode_registry(pair: &RegistryPair) -> Result<String, RegistryError> {
    pair.validate().map_err(RegistryError::Invalid)?;
    let env = Envelope {
        checksum: checksum(pair),
        format_version: FORMAT_VERSION,
        registry: serde_json::to_value(pair).expect("registry pairs serialize"),
    };
    let value = serde_json::to_value(env).expect("envelopes serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("json values serialize");
    s.push('\n');
    Ok(s)
}

pub fn decode_registry(text: &str) -> Result<RegistryPair, RegistryError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| RegistryError::Checksum(format!("file is truncated or not JSON ({e})")))?;
    match value.get("format_version") {
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(RegistryError::Version { found: v.to_string() }),
        None => return Err(RegistryError::Version { found: "none".into() }),
    }
    let env: Envelope = serde_json::from_value(value)
        .map_err(|e| RegistryError::Checksum(format!("missing checksum or registry ({e})")))?;
    let canonical = serde_json::to_string(&env.registry).expect("json values serialize");
    let found = hex::encode(Sha256::digest(canonical.as_bytes()));
    if found != env.checksum {
        return Err(RegistryError::Checksum(format!("stored {}, computed {found}", env.checksum)));
    }
    let pair: RegistryPair = serde_json::from_value(env.registry).map_err(|e| RegistryError::Invalid(e.to_string()))?;
    // Deserialization collapses duplicate ids and re-keys edges; a payload
    // that does not survive that unchanged is not canonical.
    if checksum(&pair) != found {
        return Err(RegistryError::Invalid("registry payload is not in canonical form".into()));
    }
    pair.validate().map_err(RegistryError::Invalid)?;
    Ok(pair)
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn save_registry(pair: &RegistryPair, path: &Path) -> Result<(), RegistryError> {
    let text = encode_registry(pair)?;
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn load_registry(path: &Path) -> Result<RegistryPair, RegistryError> {
    decode_registry(&fs::read_to_string(path)?)
}
