//! Output directory handling: atomic writes and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes through a temporary file in the same directory, then renames,
    /// so readers never see a partial file.
    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let err = |source| CliError::Output {
            path: target.display().to_string(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        {
            let mut w = std::io::BufWriter::new(tmp.as_file_mut());
            fill(&mut w).map_err(err)?;
            w.flush().map_err(err)?;
        }
        tmp.persist(&target).map_err(|e| err(e.error))?;
        if !self.written.iter().any(|n| n == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write_with(name, |w| w.write_all(bytes))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }
}

/// Everything needed to reproduce and audit a run.
pub struct Manifest {
    command: &'static str,
    config_text: String,
    seed: Option<u64>,
    threads: usize,
    start: Instant,
    timings: Vec<(String, f64)>,
}

impl Manifest {
    pub fn new(command: &'static str, config_text: &str, seed: Option<u64>) -> Self {
        Self {
            command,
            config_text: config_text.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            start: Instant::now(),
            timings: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push((label.to_string(), t0.elapsed().as_secs_f64()));
        out
    }

    /// `failure` carries the error and, for blow-ups, the time of failure.
    pub fn finish(self, out: &mut OutputDir, failure: Option<Value>) -> Result<(), CliError> {
        let hash = Sha256::digest(self.config_text.as_bytes());
        let timings: serde_json::Map<String, Value> =
            self.timings.into_iter().map(|(k, v)| (k, json!(v))).collect();
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_sha256": format!("{hash:x}"),
            "config": self.config_text,
            "seed": self.seed,
            "threads": self.threads,
            "status": if failure.is_some() { "failed" } else { "ok" },
            "failure": failure,
            "outputs": out.written.clone(),
            "timings_s": timings,
            "wall_clock_s": self.start.elapsed().as_secs_f64(),
        });
        out.write_json("manifest.json", &doc)
    }
}
