//! Run-directory manifests: every output file is listed with a SHA-256
//! digest; the manifest is written last, atomically via rename, so a run
//! directory with a manifest is complete.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub artifact_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

pub struct RunDir {
    pub dir: PathBuf,
    command: String,
    config: serde_json::Value,
    started: chrono::DateTime<chrono::Utc>,
    outputs: Vec<OutputEntry>,
}

impl RunDir {
    pub fn create(dir: &Path, command: &str, config: serde_json::Value) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config,
            started: chrono::Utc::now(),
            outputs: Vec::new(),
        })
    }

    /// Write a file into the run directory and record its digest.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Write `manifest.json` last, atomically.
    pub fn finish(self) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            outputs: self.outputs,
        };
        let tmp = self.dir.join("manifest.json.tmp");
        let final_path = self.dir.join("manifest.json");
        fs::write(&tmp, serde_json::to_vec_pretty(&manifest)?)?;
        fs::rename(&tmp, &final_path)?;
        Ok(())
    }
}

/// Re-hash every output listed in a run directory's manifest.
pub fn verify_dir(dir: &Path) -> Result<()> {
    let manifest_path = dir.join("manifest.json");
    let manifest: RunManifest = serde_json::from_slice(
        &fs::read(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )?;
    let mut bad = Vec::new();
    for entry in &manifest.outputs {
        let path = dir.join(&entry.path);
        match fs::read(&path) {
            Ok(bytes) => {
                if sha256_hex(&bytes) != entry.sha256 {
                    bad.push(format!("{}: digest mismatch", entry.path));
                } else if bytes.len() as u64 != entry.bytes {
                    bad.push(format!("{}: size mismatch", entry.path));
                }
            }
            Err(e) => bad.push(format!("{}: {e}", entry.path)),
        }
    }
    if !bad.is_empty() {
        bail!("verification failed:\n  {}", bad.join("\n  "));
    }
    Ok(())
}
