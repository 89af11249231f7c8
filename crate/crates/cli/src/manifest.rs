use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bandit_minimax::Result;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config: Value,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
    pub summary: Value,
}

/// Collects outputs of one run and writes `manifest.json` when done.
pub struct Run {
    subcommand: String,
    config: Value,
    started: Instant,
    outputs: Vec<PathBuf>,
    pub summary: Value,
    quiet: bool,
}

impl Run {
    pub fn start(subcommand: &str, config: Value, quiet: bool) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config,
            started: Instant::now(),
            outputs: Vec::new(),
            summary: Value::Null,
            quiet,
        }
    }

    pub fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("[{:>7.1}s] {}", self.started.elapsed().as_secs_f64(), msg.as_ref());
        }
    }

    /// Creates `path` (and its parent directories) and records it as an output.
    pub fn create(&mut self, path: &Path) -> Result<BufWriter<File>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        self.outputs.push(path.to_path_buf());
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut f = self.create(path)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for p in &self.outputs {
            let bytes = fs::read(p)?;
            outputs.push(OutputDigest {
                path: p.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
            });
        }
        let manifest = RunManifest {
            subcommand: self.subcommand,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
            summary: self.summary,
        };
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let mut f = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(path)
    }
}

/// Directory holding `path`, or `.` for bare file names.
pub fn dir_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
