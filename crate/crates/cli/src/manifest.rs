use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const BUILD_ID: &str = env!("MSFT_BUILD_ID");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub steps: u64,
    pub samples: u64,
    pub max_abs_action: f64,
    pub max_abs_action_prod: f64,
    pub mean_s: Option<f64>,
    pub min_s: f64,
    pub max_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub acceptance_rate: f64,
    pub proposal_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub build: String,
    /// Resolved configuration text, re-ingestible as a config file.
    pub config: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub complete: bool,
    pub drift: Option<DriftSummary>,
    pub acceptance: Option<AcceptanceStats>,
    /// Free-form named results, e.g. z-score pass fractions.
    pub results: serde_json::Map<String, serde_json::Value>,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(command: &str, config: String, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            build: BUILD_ID.to_string(),
            config,
            seed,
            wall_clock_seconds: 0.0,
            complete: true,
            drift: None,
            acceptance: None,
            results: serde_json::Map::new(),
            artifacts: Vec::new(),
        }
    }

    /// Record `path` (inside `dir`) with its current checksum.
    pub fn add_artifact(&mut self, dir: &Path, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)?;
        let rel = path.strip_prefix(dir).unwrap_or(path);
        self.artifacts.push(Artifact {
            path: rel.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Other(e.to_string()))?;
        msft_core::dynamics::write_atomic(path, text.as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
    }

    /// Artifacts whose file on disk no longer matches the recorded checksum.
    pub fn verify(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let p = dir.join(&a.path);
            if !p.exists() || file_sha256(&p)? != a.sha256 {
                bad.push(p);
            }
        }
        Ok(bad)
    }
}
