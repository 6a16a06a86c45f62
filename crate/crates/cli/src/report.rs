//! Check verdicts, CSV artifacts and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Verdict of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Threshold met.
    Pass,
    /// Threshold met, but a supporting fit is of poor quality.
    Warn,
    /// Threshold missed.
    Fail,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
        }
    }
}

/// One verified property with its measured values.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Descriptive tag of the property verified (e.g. `radial-growth`).
    pub tag: &'static str,
    /// What exactly was checked.
    pub name: String,
    /// Verdict.
    pub status: Status,
    /// Measured values, human readable.
    pub measured: String,
}

impl Check {
    /// Pass or fail according to `ok`.
    pub fn new(tag: &'static str, name: impl Into<String>, ok: bool, measured: impl Into<String>) -> Check {
        Check { tag, name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, measured: measured.into() }
    }

    /// Downgrade a pass to a warning when `poor_fit` holds.
    pub fn warn_if(mut self, poor_fit: bool) -> Check {
        if poor_fit && self.status == Status::Pass {
            self.status = Status::Warn;
        }
        self
    }

    /// Whether the check counts as failed (warnings fail under `strict`).
    pub fn failed(&self, strict: bool) -> bool {
        self.status == Status::Fail || (strict && self.status == Status::Warn)
    }
}

/// Artifacts and checks of one subcommand run.
#[derive(Debug, Default)]
pub struct Report {
    /// Checks in execution order.
    pub checks: Vec<Check>,
    /// CSV artifacts (file name, contents) in creation order.
    pub artifacts: Vec<(String, String)>,
}

impl Report {
    /// Record a check.
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Record a CSV artifact.
    pub fn artifact(&mut self, name: impl Into<String>, body: String) {
        self.artifacts.push((name.into(), body));
    }

    /// The checks as CSV (tag, check, status, measured).
    pub fn checks_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tag", "check", "status", "measured"]).expect("in-memory write");
        for c in &self.checks {
            w.write_record([c.tag, c.name.as_str(), c.status.label(), c.measured.as_str()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
    }

    /// Failed checks under the given strictness.
    pub fn failures(&self, strict: bool) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.failed(strict)).collect()
    }
}

/// Lower-case hexadecimal SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct ArtifactEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct CheckCounts {
    pass: usize,
    warn: usize,
    fail: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    created_unix_seconds: u64,
    seed: u64,
    workers: usize,
    strict: bool,
    operator_sha256: String,
    checks: CheckCounts,
    artifacts: Vec<ArtifactEntry>,
    config: &'a RunConfig,
}

/// Context recorded in the manifest.
pub struct RunInfo<'a> {
    /// Subcommand name.
    pub command: &'a str,
    /// Effective configuration.
    pub config: &'a RunConfig,
    /// Worker threads.
    pub workers: usize,
    /// Strict mode.
    pub strict: bool,
    /// Canonical description of the operator (only its hash is recorded).
    pub operator: String,
}

/// Write every artifact, `checks.csv` and `manifest.toml` into `dir`.
///
/// Artifact bodies depend only on configuration and seeds; the creation time
/// appears in the manifest alone.
pub fn write_run(dir: &Path, report: &Report, info: &RunInfo<'_>) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    let checks = report.checks_csv();
    for (name, body) in report.artifacts.iter().map(|(n, b)| (n.as_str(), b)).chain([("checks.csv", &checks)]) {
        fs::write(dir.join(name), body)?;
        entries.push(ArtifactEntry { file: name.to_string(), sha256: sha256_hex(body.as_bytes()) });
    }
    let count = |s: Status| report.checks.iter().filter(|c| c.status == s).count();
    let manifest = Manifest {
        command: info.command,
        version: env!("CARGO_PKG_VERSION"),
        created_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        seed: info.config.seed,
        workers: info.workers,
        strict: info.strict,
        operator_sha256: sha256_hex(info.operator.as_bytes()),
        checks: CheckCounts { pass: count(Status::Pass), warn: count(Status::Warn), fail: count(Status::Fail) },
        artifacts: entries,
        config: info.config,
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(io::Error::other)?;
    fs::write(&path, text)?;
    Ok(path)
}
