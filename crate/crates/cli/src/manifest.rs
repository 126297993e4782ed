use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Versions {
    pub pathcurrents: &'static str,
    pub cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub status: &'static str,
    pub exit_code: i32,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> Versions {
    Versions { pathcurrents: pathcurrents::VERSION, cli: env!("CARGO_PKG_VERSION") }
}

/// Checksums of `files`, relative to `dir`, in the given order.
pub fn entries(dir: &Path, files: &[String]) -> std::io::Result<Vec<OutputEntry>> {
    files
        .iter()
        .map(|f| {
            let bytes = fs::read(dir.join(f))?;
            Ok(OutputEntry { file: f.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
        })
        .collect()
}

pub fn write(dir: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(dir.join("manifest.json"), text + "\n")
}
