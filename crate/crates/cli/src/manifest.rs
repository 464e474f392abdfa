//! Run manifests: every command writes `manifest.json` next to its outputs
//! with the fully resolved configuration (and master seed where one
//! applies), so `ait replay` can reproduce the output files byte-for-byte.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    #[serde(default)]
    pub master_seed: Option<u64>,
    /// Fully resolved command configuration; sufficient to replay the run.
    pub config: serde_json::Value,
    /// File names written into the output directory (manifest excluded).
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

pub struct ManifestTimer {
    start: Instant,
}

impl ManifestTimer {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
        }
    }

    pub fn finish<C: Serialize>(
        self,
        out_dir: &Path,
        command: &str,
        master_seed: Option<u64>,
        config: &C,
        outputs: Vec<String>,
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            config: serde_json::to_value(config)
                .map_err(|e| CliError::Runtime(format!("manifest serialization failed: {e}")))?,
            outputs,
            duration_seconds: self.start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("manifest serialization failed: {e}")))?;
        std::fs::write(out_dir.join("manifest.json"), text + "\n")
            .map_err(|e| CliError::Runtime(format!("cannot write manifest: {e}")))?;
        Ok(manifest)
    }
}

pub fn load_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid manifest: {e}")))
}
