//! Per-stage run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    /// Seeds derived from the master seed, by key.
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every file read, by path.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    /// Seconds since the Unix epoch. Not part of any hash.
    pub timestamp: u64,
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(stage: &str, cfg: &RunConfig) -> Self {
        Self {
            stage: stage.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn path(out: &Path, stage: &str) -> PathBuf {
        out.join("manifests").join(format!("{stage}.json"))
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = Self::path(out, &self.stage);
        let dir = path.parent().expect("manifest path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let json = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::bad(format!("{}: {e}", path.display())))
    }
}
