use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::experiments::Artifact;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub kind: String,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub wall_time_s: f64,
    pub complete: bool,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub violations: Vec<String>,
    #[serde(default)]
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([("fockfield".to_string(), env!("CARGO_PKG_VERSION").to_string())])
}

/// Writes every artifact, then the manifest listing them.
pub fn write(dir: &Path, mut manifest: Manifest, artifacts: &[Artifact]) -> io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    manifest.artifacts = artifacts
        .iter()
        .map(|a| {
            fs::write(dir.join(&a.name), &a.bytes)?;
            Ok(ArtifactEntry { path: a.name.clone(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() as u64 })
        })
        .collect::<io::Result<_>>()?;
    let value = serde_json::to_value(&manifest).expect("manifest serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    fs::write(dir.join(FILE_NAME), text)?;
    Ok(manifest)
}

pub fn read(path: &Path) -> Result<Manifest, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{} is not a manifest: {e}", path.display()))
}
