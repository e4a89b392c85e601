use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use repgeo::ingest::{load_run, MANIFEST_FILE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::{io_err, CliError};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    /// SHA-256 over the manifest, every tensor it lists and the loss log, in
    /// manifest order; or over the single tensor file.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    /// The full command, input paths absolute; replaying it reproduces `results`.
    pub parameters: Command,
    pub inputs: Vec<InputDigest>,
    /// SHA-256 over the concatenated input digests.
    pub digest: String,
    pub threads: usize,
    pub results: serde_json::Value,
    /// Files written next to this report, relative to the output directory.
    pub outputs: Vec<String>,
    pub timings: Timings,
}

/// Collects results, outputs and step timings while a command runs.
pub struct Recorder {
    pub out: PathBuf,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub steps: Vec<Step>,
}

impl Recorder {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(io_err(out))?;
        Ok(Self { out: out.to_owned(), inputs: Vec::new(), outputs: Vec::new(), steps: Vec::new() })
    }

    pub fn timed<T>(&mut self, name: impl Into<String>, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let value = f()?;
        self.steps.push(Step { name: name.into(), seconds: start.elapsed().as_secs_f64() });
        Ok(value)
    }

    /// Absolute path for an output file, creating parent directories.
    pub fn output(&mut self, rel: impl Into<String>) -> Result<PathBuf, CliError> {
        let rel = rel.into();
        let path = self.out.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        self.outputs.push(rel);
        Ok(path)
    }

    pub fn digest_input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = digest_input(path)?;
        self.inputs.push(InputDigest { path: path.to_owned(), sha256 });
        Ok(())
    }
}

fn hash_file(hasher: &mut Sha256, path: &Path) -> Result<(), CliError> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            return Ok(());
        }
        hasher.update(&buf[..n]);
    }
}

pub fn digest_input(path: &Path) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    if is_tensor_file(path) {
        hash_file(&mut hasher, path)?;
    } else {
        let run = load_run(path)?;
        hash_file(&mut hasher, run.manifest_path())?;
        for f in &run.manifest().files {
            hash_file(&mut hasher, &run.root().join(&f.path))?;
        }
        if let Some(log) = &run.manifest().loss_log {
            hash_file(&mut hasher, &run.root().join(log))?;
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn combined_digest(inputs: &[InputDigest]) -> String {
    let mut hasher = Sha256::new();
    for i in inputs {
        hasher.update(i.sha256.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// A regular file that is not a manifest is read as a bare tensor.
pub fn is_tensor_file(path: &Path) -> bool {
    path.is_file() && path.file_name().is_none_or(|n| n != MANIFEST_FILE) && path.extension().is_none_or(|e| e != "json")
}

pub fn read_report(path: &Path) -> Result<ReportDocument, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_owned(), source })
}
