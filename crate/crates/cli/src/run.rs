//! Run directories and manifests.

use crate::error::CliError;
use chrono::{DateTime, SecondsFormat, Utc};
use hokdv_core::io::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Measured but not judged (exploratory runs, single-step traces).
    Informational,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), status, detail: detail.into() }
    }

    pub fn judged(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if pass { Status::Pass } else { Status::Fail }, detail)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    seed: u64,
    version: String,
    config_hash: &'a str,
    started: String,
    finished: String,
    outputs: &'a [String],
    verdicts: &'a [Verdict],
    exit_code: i32,
}

pub struct Run {
    pub dir: PathBuf,
    command: &'static str,
    config: toml::Table,
    seed: u64,
    hash: String,
    started: DateTime<Utc>,
    outputs: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

impl Run {
    /// `<root>/<command>-<UTC timestamp>-<config hash>`; the resolved
    /// config is stored as `config.toml` so the run can be replayed with
    /// `--config`.
    pub fn create(root: &Path, command: &'static str, config: toml::Table, seed: u64) -> Result<Self, CliError> {
        let started = Utc::now();
        let canonical = toml::to_string(&config).map_err(|e| CliError::Failure(e.into()))?;
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\0");
        h.update(canonical.as_bytes());
        let hash: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        let stem = format!("{command}-{}-{}", started.format("%Y%m%dT%H%M%S%.3fZ"), &hash[..12]);
        std::fs::create_dir_all(root)?;
        let mut dir = root.join(&stem);
        let mut k = 1;
        while dir.exists() {
            dir = root.join(format!("{stem}-{k}"));
            k += 1;
        }
        std::fs::create_dir(&dir)?;
        let mut run = Run { dir, command, config, seed, hash, started, outputs: Vec::new(), verdicts: Vec::new() };
        run.write("config.toml", canonical.as_bytes())?;
        Ok(run)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status == Status::Fail) {
            1
        } else {
            0
        }
    }

    /// Writes the manifest last, so a directory with a manifest is complete.
    pub fn finish(mut self) -> Result<i32, CliError> {
        let code = self.exit_code();
        let config = serde_json::to_value(&self.config)?;
        let ts = |t: DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
        let outputs = std::mem::take(&mut self.outputs);
        let m = Manifest {
            command: self.command,
            config,
            seed: self.seed,
            version: format!("hokdv {}", env!("CARGO_PKG_VERSION")),
            config_hash: &self.hash,
            started: ts(self.started),
            finished: ts(Utc::now()),
            outputs: &outputs,
            verdicts: &self.verdicts,
            exit_code: code,
        };
        let text = serde_json::to_string_pretty(&m)? + "\n";
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())?;
        for v in &self.verdicts {
            let tag = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Informational => "INFO",
            };
            println!("{tag} {}: {}", v.name, v.detail);
        }
        println!("run directory: {}", self.dir.display());
        Ok(code)
    }
}

/// Full-precision float for CSV cells.
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Two-column plot data.
pub fn columns(rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    rows.into_iter().map(|(x, y)| format!("{} {}\n", f(x), f(y))).collect()
}
