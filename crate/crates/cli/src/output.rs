//! Atomic file output and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{io_error, CliError};

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// CSV with a header row, '.' decimals and LF line endings.
pub fn write_csv<R: AsRef<[String]>>(dir: &Path, name: &str, header: &[&str], rows: &[R]) -> Result<PathBuf, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(format!("{name}: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.as_ref()).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(format!("{name}: {e}")))?;
    write_atomic(dir, name, &bytes)
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub wall_seconds: f64,
}

/// Record of one command run. Written with status "running" before any
/// work and rewritten as "complete" or "failed" afterwards. Wall times are
/// the only fields that differ between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: &'static str,
    pub config_sha256: String,
    pub dataset_sha256: Option<String>,
    pub seeds: Vec<u64>,
    pub hyperparameters: serde_json::Value,
    /// Upper bound on warm-started retrains per poisoning seed.
    pub retrain_bound: Option<u64>,
    pub retrains: Option<u64>,
    pub stages: Vec<StageTime>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

pub struct ManifestWriter {
    dir: PathBuf,
    name: String,
    pub manifest: RunManifest,
    clock: Instant,
}

impl ManifestWriter {
    pub fn start(dir: &Path, command: &str, config_sha256: &str) -> Result<Self, CliError> {
        let manifest = RunManifest {
            tool: "potlab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            status: "running",
            config_sha256: config_sha256.to_string(),
            dataset_sha256: None,
            seeds: Vec::new(),
            hyperparameters: serde_json::Value::Null,
            retrain_bound: None,
            retrains: None,
            stages: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            error: None,
        };
        let w = Self { dir: dir.to_path_buf(), name: format!("manifest_{command}.json"), manifest, clock: Instant::now() };
        w.flush()?;
        Ok(w)
    }

    fn flush(&self) -> Result<(), CliError> {
        write_json(&self.dir, &self.name, &self.manifest).map(|_| ())
    }

    /// Closes the current stage, timed from the previous one.
    pub fn stage(&mut self, name: &str) {
        let wall_seconds = self.clock.elapsed().as_secs_f64();
        self.clock = Instant::now();
        self.manifest.stages.push(StageTime { stage: name.to_string(), wall_seconds });
    }

    pub fn output(&mut self, path: &Path) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.manifest.outputs.push(name);
    }

    pub fn finish(mut self, result: &Result<(), CliError>) -> Result<(), CliError> {
        match result {
            Ok(()) => self.manifest.status = "complete",
            Err(e) => {
                self.manifest.status = "failed";
                self.manifest.error = Some(e.to_string());
            }
        }
        self.flush()
    }
}
