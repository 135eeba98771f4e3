// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run manifests: enough to tell whether two runs saw the same inputs and
//! settings. No timestamps or host details, so equal runs write equal files.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

/// Digest over the store manifest and every file it lists, in listed order.
pub fn sha256_store(root: &Path) -> CliResult<String> {
    let manifest_path = root.join(attnprobe::attention::MANIFEST);
    let text = std::fs::read(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    let manifest: attnprobe::attention::StoreManifest =
        serde_json::from_slice(&text).map_err(|e| attnprobe::Error::Store {
            path: manifest_path.clone(),
            msg: e.to_string(),
        })?;
    let mut h = Sha256::new();
    h.update(sha256_bytes(&text).as_bytes());
    for f in &manifest.files {
        h.update(b"\n");
        h.update(f.as_bytes());
        h.update(b" ");
        h.update(sha256_file(&root.join(f))?.as_bytes());
    }
    Ok(hex(&h.finalize()))
}

#[derive(Debug, Serialize)]
pub struct Checksum {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub attnprobe: &'static str,
    pub attnprobe_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub versions: Versions,
    pub config: &'a RunConfig,
    pub config_sources: serde_json::Value,
    pub config_sha256: String,
    pub inputs: Vec<Checksum>,
    /// Paths relative to the run's output directory.
    pub outputs: Vec<Checksum>,
    pub stats: serde_json::Value,
}

pub fn config_sha256(cfg: &RunConfig) -> String {
    sha256_bytes(serde_json::to_string(cfg).expect("config serialises").as_bytes())
}

/// Records inputs and outputs as a command runs.
pub struct ManifestBuilder {
    command: &'static str,
    inputs: Vec<Checksum>,
    outputs: Vec<PathBuf>,
    stats: serde_json::Map<String, serde_json::Value>,
}

impl ManifestBuilder {
    pub fn new(command: &'static str) -> Self {
        ManifestBuilder {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stats: serde_json::Map::new(),
        }
    }

    pub fn input_file(&mut self, path: &Path) -> CliResult<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(Checksum {
            path: path.to_path_buf(),
            sha256,
        });
        Ok(())
    }

    pub fn input_store(&mut self, root: &Path) -> CliResult<()> {
        let sha256 = sha256_store(root)?;
        self.inputs.push(Checksum {
            path: root.to_path_buf(),
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) {
        self.stats
            .insert(key.to_string(), serde_json::to_value(value).expect("stat serialises"));
    }

    /// Write `dir/manifest.json`.
    pub fn write(self, cfg: &RunConfig, dir: &Path) -> CliResult<PathBuf> {
        let mut outputs = Vec::new();
        for p in &self.outputs {
            let rel = p.strip_prefix(&cfg.out).unwrap_or(p).to_path_buf();
            outputs.push(Checksum {
                path: rel,
                sha256: sha256_file(p)?,
            });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: self.command,
            versions: Versions {
                attnprobe: attnprobe::VERSION,
                attnprobe_cli: env!("CARGO_PKG_VERSION"),
            },
            config: cfg,
            config_sources: cfg.sources_json(),
            config_sha256: config_sha256(cfg),
            inputs: self.inputs,
            outputs,
            stats: serde_json::Value::Object(self.stats),
        };
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
