//! Config loading with line-anchored diagnostics, and the canonical hash.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use trolleypose::ValidationError;

use crate::error::CliError;

/// A parsed config together with its source text, for anchoring later
/// validation failures to a line.
pub struct Loaded<T> {
    pub value: T,
    text: String,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}:{}: {}", path.display(), e.line(), strip_position(&e))))?;
    Ok(Loaded { value, text })
}

impl<T> Loaded<T> {
    pub fn reject(&self, path: &Path, err: &ValidationError) -> CliError {
        CliError::Invalid(match field_line(&self.text, &err.field) {
            Some(line) => format!("{}:{line}: {err}", path.display()),
            None => format!("{}: {err}", path.display()),
        })
    }
}

/// serde_json appends " at line L column C"; callers print the line themselves.
pub fn strip_position(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

/// 1-based line of the key named by a dotted field path such as
/// `scenario.camera.fx` or `occluders[1].end_frame`, found by scanning for
/// each key in turn.
pub fn field_line(text: &str, field: &str) -> Option<usize> {
    let mut pos = 0;
    let mut found = None;
    for segment in field.split('.') {
        let key = segment.split('[').next().unwrap_or(segment);
        if key.is_empty() {
            continue;
        }
        let needle = format!("\"{key}\"");
        let at = text[pos..].find(&needle)? + pos;
        found = Some(at);
        pos = at + needle.len();
    }
    found.map(|at| text[..at].matches('\n').count() + 1)
}

/// SHA-256 over the compact JSON of the effective config. Object keys come
/// out sorted, so formatting and key order in the source file do not matter.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("config types serialize to JSON");
    let canonical = serde_json::to_string(&value).expect("JSON values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}
