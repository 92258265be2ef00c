//! Experiment orchestration behind the `regcoloc` binary.
//!
//! Every subcommand takes a serializable config (loadable with `--config`),
//! validates it before doing any work and writes outputs that embed the
//! config, its SHA-256 hash and the seed. JSON outputs are byte-identical
//! across runs and thread counts; only wall-clock columns of the benchmark
//! CSV vary.

mod benchmark;
mod fpr;
mod mine;
mod nulls;
mod synth;

pub use benchmark::{run_benchmark, BenchAxis, BenchmarkConfig};
pub use fpr::{run_fpr, FprConfig, FprRow};
pub use mine::{run_mine, MineConfig};
pub use nulls::{run_validate_nulls, ValidateNullsConfig};
pub use synth::{run_synth, SynthCommandConfig};

use crate::colocation::Candidate;
use crate::provenance::Provenance;
use crate::rational::Rational;
use crate::spatial::Dataset;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

/// Failure of a subcommand. `Config` maps to exit code 2, `Runtime` to 1.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{message}")]
    Config {
        message: String,
        path: Option<PathBuf>,
    },
    #[error("{message}")]
    Runtime {
        message: String,
        path: Option<PathBuf>,
    },
}

impl HarnessError {
    pub fn config(message: impl Into<String>) -> Self {
        HarnessError::Config {
            message: message.into(),
            path: None,
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        HarnessError::Runtime {
            message: message.into(),
            path: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Runtime { .. } => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let (kind, message, path) = match self {
            HarnessError::Config { message, path } => ("config", message, path),
            HarnessError::Runtime { message, path } => ("runtime", message, path),
        };
        json!({ "error": { "kind": kind, "message": message, "path": path } }).to_string()
    }
}

pub(crate) fn require_file(path: &Path, what: &str) -> Result<(), HarnessError> {
    if path.as_os_str().is_empty() {
        return Err(HarnessError::config(format!("no {what} file given")));
    }
    if !path.is_file() {
        return Err(HarnessError::Config {
            message: format!("{what} file not found: {}", path.display()),
            path: Some(path.to_path_buf()),
        });
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Runtime {
            message: format!("cannot create {}: {e}", dir.display()),
            path: Some(dir.to_path_buf()),
        })?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::Runtime {
        message: format!("cannot write {}: {e}", path.display()),
        path: Some(path.to_path_buf()),
    })
}

pub(crate) fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

/// Wraps a result document with the provenance block and the config.
pub(crate) fn document<C: Serialize, B: Serialize>(
    command: &str,
    config: &C,
    seed: u64,
    body: &B,
) -> serde_json::Value {
    json!({
        "command": command,
        "provenance": Provenance::new(config, seed),
        "config": config,
        "result": body,
    })
}

/// Tidy CSV whose every row ends with the config hash and seed columns.
pub(crate) struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
    hash: String,
    seed: String,
}

impl CsvTable {
    pub(crate) fn new<C: Serialize>(config: &C, seed: u64, columns: &[&str]) -> Self {
        let p = Provenance::new(config, seed);
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = columns.to_vec();
        header.extend(["config_sha256", "seed"]);
        writer.write_record(&header).expect("in-memory write");
        CsvTable {
            writer,
            hash: p.config_hash,
            seed: p.seed.to_string(),
        }
    }

    pub(crate) fn row(&mut self, cells: &[String]) {
        let record = cells
            .iter()
            .map(String::as_str)
            .chain([self.hash.as_str(), self.seed.as_str()]);
        self.writer.write_record(record).expect("in-memory write");
    }

    pub(crate) fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }
}

pub(crate) fn parse_candidate(
    dataset: &Dataset,
    names: &[String],
) -> Result<Candidate, HarnessError> {
    let ids = names
        .iter()
        .map(|n| {
            dataset.feature_id(n).ok_or_else(|| {
                HarnessError::config(format!(
                    "candidate feature `{n}` does not occur in the instances file"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Candidate::new(ids).map_err(|e| HarnessError::config(format!("candidate {names:?}: {e}")))
}

pub(crate) fn candidate_names(dataset: &Dataset, c: &Candidate) -> Vec<String> {
    c.features()
        .iter()
        .map(|f| dataset.feature_name(*f).to_string())
        .collect()
}

pub(crate) fn decimal(r: Rational) -> String {
    format!("{:.6}", r.to_f64())
}

/// Deterministic per-trial seed.
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    crate::significance::stream_seed(
        master,
        crate::spatial::PartitionId(u32::MAX),
        crate::spatial::FeatureId(u32::MAX),
        index as usize,
    )
}
