//! Content-hash manifest for pipeline memoization.
//!
//! A stage is fresh when its recorded input hashes, config hash and output
//! hashes all still match — and no earlier stage re-executed this run. Any
//! upstream execution marks everything downstream stale, so a rebuilt
//! artifact always re-runs its consumers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub config_hash: String,
    pub completed_at: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> Manifest {
        fs::read_to_string(path)
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }

    /// True when every recorded hash still matches the filesystem.
    pub fn is_fresh(&self, stage: &str, inputs: &[&Path], config_hash: &str) -> bool {
        let Some(rec) = self.stages.get(stage) else {
            return false;
        };
        if rec.config_hash != config_hash {
            return false;
        }
        let current: BTreeMap<String, String> = inputs
            .iter()
            .filter_map(|p| hash_path(p).ok().map(|h| (p.display().to_string(), h)))
            .collect();
        if current.len() != inputs.len() || current != rec.inputs {
            return false;
        }
        for (path, expected) in &rec.outputs {
            match hash_path(Path::new(path)) {
                Ok(actual) if &actual == expected => {}
                _ => return false,
            }
        }
        true
    }

    pub fn record(
        &mut self,
        stage: &str,
        inputs: &[&Path],
        outputs: &[&Path],
        config_hash: &str,
    ) -> Result<()> {
        let mut input_hashes = BTreeMap::new();
        for p in inputs {
            input_hashes.insert(p.display().to_string(), hash_path(p)?);
        }
        let mut output_hashes = BTreeMap::new();
        for p in outputs {
            output_hashes.insert(p.display().to_string(), hash_path(p)?);
        }
        self.stages.insert(
            stage.to_string(),
            StageRecord {
                inputs: input_hashes,
                outputs: output_hashes,
                config_hash: config_hash.to_string(),
                completed_at: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                tool_version: TOOL_VERSION.to_string(),
            },
        );
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Content hash of a file, or of a directory (sorted relative paths plus
/// their file hashes).
pub fn hash_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut entries: Vec<(String, String)> = Vec::new();
        for e in walkdir::WalkDir::new(path).sort_by_file_name() {
            let e = e?;
            if e.file_type().is_file() {
                let rel = e
                    .path()
                    .strip_prefix(path)
                    .expect("under root")
                    .to_string_lossy()
                    .replace('\\', "/");
                let bytes = fs::read(e.path())
                    .with_context(|| format!("reading {}", e.path().display()))?;
                entries.push((rel, hex_digest(&bytes)));
            }
        }
        let listing: String = entries.iter().map(|(p, h)| format!("{p}\0{h}\n")).collect();
        Ok(hex_digest(listing.as_bytes()))
    } else {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(hex_digest(&bytes))
    }
}
