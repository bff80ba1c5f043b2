//! Run manifests: every command records its fully resolved configuration,
//! seed, timestamps, and input/output paths, so a run can be audited and
//! replayed bit-for-bit (`isa rerun`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved parameter set, defaults included.
    pub config: Value,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    started_at: String,
    inputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start(command: &str, seed: u64, inputs: Vec<PathBuf>) -> Self {
        Self {
            command: command.to_string(),
            seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            inputs,
        }
    }

    pub fn finish<C: Serialize>(
        self,
        config: &C,
        out_dir: &Path,
        outputs: Vec<PathBuf>,
    ) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: self.command,
            config: serde_json::to_value(config).map_err(CliError::internal)?,
            seed: self.seed,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            inputs: self.inputs,
            outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        };
        for out in &manifest.outputs {
            if !out.exists() {
                return Err(CliError::internal(format!(
                    "declared output {} was not written",
                    out.display()
                )));
            }
        }
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(CliError::internal)?;
        std::fs::write(&path, text + "\n").map_err(CliError::internal)?;
        Ok(path)
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("malformed manifest {}: {e}", path.display())))
}
