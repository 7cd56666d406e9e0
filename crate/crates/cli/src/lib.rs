//! Command-line front end for the Clifford and fermionic QCA engines.
//!
//! Every command writes its artifacts under the output directory together
//! with `config.toml`, `summary.txt` and `manifest.toml`. The exit status is
//! 0 when every checked invariant holds, 1 when one fails, 2 on usage or
//! engine errors and 3 when a search budget is exhausted.

pub mod commands;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{Engine, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    /// An engine error with the stage that raised it.
    Engine { stage: &'static str, source: qca_core::Error },
    Budget(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Engine { stage, source } => write!(f, "{stage}: {source}"),
            CliError::Budget(m) => write!(f, "budget exhausted: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) => 3,
            _ => 2,
        }
    }
}

/// Tags engine errors with a stage name.
pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for qca_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Engine { stage, source })
    }
}

/// A checked invariant.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Results of a command: key/value summary lines and checks.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub lines: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// A search stopped at its budget before completing.
    pub exhausted: bool,
}

impl Report {
    pub fn line(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    /// Records `value <= tol`.
    pub fn bound(&mut self, name: &str, value: f64, tol: f64) {
        self.check(name, value <= tol, format!("{value:.3e} <= {tol:.0e}"));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        match (self.passed(), self.exhausted) {
            (false, _) => 1,
            (true, true) => 3,
            (true, false) => 0,
        }
    }

    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            0 => "ok",
            3 => "budget_exhausted",
            _ => "failed",
        }
    }

    pub fn render(&self, command: &str, hash: &str) -> String {
        let mut s = format!("command: {command}\nconfig_hash: {hash}\n");
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}: {v}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "check {}: {} ({})", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
        }
        let _ = writeln!(s, "status: {}", self.status());
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    status: &'a str,
    exit_code: i32,
    artifacts: &'a [ArtifactEntry],
}

/// Output directory with a running list of written files.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.entries.push(ArtifactEntry {
            path: name.into(),
            sha256: config::hex(&Sha256::digest(contents.as_bytes())),
            bytes: contents.len(),
        });
        Ok(())
    }

    /// Writes the config, the summary and the manifest.
    pub fn finish(mut self, command: &str, cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
        let hash = cfg.hash();
        self.write("config.toml", &cfg.canonical().to_toml())?;
        self.write("summary.txt", &report.render(command, &hash))?;
        let manifest = Manifest {
            command,
            config_hash: hash,
            status: report.status(),
            exit_code: report.exit_code(),
            artifacts: &self.entries,
        };
        let text = toml::to_string(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        let path = self.dir.join("manifest.toml");
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
