use std::io::{self, Write};
use std::time::Duration;

use serde::Serialize;

/// Provenance written next to every set of run outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Hex SHA-256 of the canonical effective config, seed override included.
    pub config_hash: String,
    pub rng_seed: u64,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(config_hash: String, rng_seed: u64, outputs: &[&str], elapsed: Duration) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            rng_seed,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            wall_clock_seconds: elapsed.as_secs_f64(),
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }
}
