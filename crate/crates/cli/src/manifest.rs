use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_digest: String,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub exit_code: u8,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct ManifestBuilder {
    command: String,
    input_digest: String,
    config: serde_json::Value,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, input: &[u8], config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            input_digest: format!("sha256:{}", sha256_hex(input)),
            config,
            started: Instant::now(),
        }
    }

    pub fn finish(self, outputs: Vec<PathBuf>, exit_code: u8) -> RunManifest {
        RunManifest {
            command: self.command,
            input_digest: self.input_digest,
            config: self.config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
            exit_code,
        }
    }
}

/// `out.csv` gets `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the manifest to `path` if given, otherwise to stderr.
pub fn emit(manifest: &RunManifest, path: Option<&Path>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    match path {
        Some(p) => std::fs::write(p, text + "\n"),
        None => {
            eprintln!("manifest: {}", serde_json::to_string(manifest).expect("manifest serializes"));
            Ok(())
        }
    }
}
