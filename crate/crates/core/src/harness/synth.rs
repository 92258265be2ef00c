use super::HarnessError;
use crate::synthgen::{generate, write_output, SynthConfig, SynthError};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthCommandConfig {
    pub synth: SynthConfig,
    pub out_dir: PathBuf,
    /// File name stem of the three outputs.
    pub stem: String,
}

impl Default for SynthCommandConfig {
    fn default() -> Self {
        SynthCommandConfig {
            synth: SynthConfig::default(),
            out_dir: PathBuf::from("out"),
            stem: "synthetic".into(),
        }
    }
}

/// Writes `<stem>.csv`, `<stem>.geojson` and `<stem>.truth.json`.
pub fn run_synth(config: &SynthCommandConfig) -> Result<Vec<PathBuf>, HarnessError> {
    if config.stem.is_empty() || config.stem.contains(['/', '\\']) {
        return Err(HarnessError::config(
            "stem must be a plain, non-empty file name",
        ));
    }
    let out = generate(&config.synth).map_err(|e| HarnessError::config(e.to_string()))?;
    write_output(&out, &config.synth, &config.out_dir, &config.stem).map_err(|e| match e {
        SynthError::Io { path, source } => HarnessError::Runtime {
            message: format!("cannot write {}: {source}", path.display()),
            path: Some(path),
        },
        other => HarnessError::runtime(other.to_string()),
    })
}
