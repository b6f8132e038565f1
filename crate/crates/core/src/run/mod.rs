//! Scenario runner: configuration, output bundles with manifests, and the report view.

pub mod config;
mod scenarios;
pub mod svg;

pub use config::{apply_override, load_config, parse_config, RunConfig, Scenario, OUTPUT_ENV};

use crate::error::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

/// Exit code for an error raised while running a scenario.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::Config(_) => EXIT_CONFIG,
        Error::AuditFailed(_) => EXIT_AUDIT,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ConfigError,
    NumericalFailure,
    AuditFailure,
}

impl Status {
    fn from_code(code: i32) -> Self {
        match code {
            EXIT_OK => Status::Ok,
            EXIT_CONFIG => Status::ConfigError,
            EXIT_AUDIT => Status::AuditFailure,
            _ => Status::NumericalFailure,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub name: String,
    pub pass: bool,
    /// What the audit checks, in words.
    pub anchor: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config: serde_json::Value,
    pub status: Status,
    pub exit_code: i32,
    pub errors: Vec<String>,
    pub stages: Vec<Stage>,
    pub files: Vec<FileEntry>,
    pub audits: Vec<AuditEntry>,
    pub summary: serde_json::Map<String, serde_json::Value>,
}

pub const MANIFEST: &str = "manifest.json";

/// Output directory under construction.
pub struct Bundle {
    dir: PathBuf,
    files: Vec<FileEntry>,
    stages: Vec<Stage>,
    audits: Vec<AuditEntry>,
    summary: serde_json::Map<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Bundle {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Bundle { dir: dir.to_path_buf(), files: Vec::new(), stages: Vec::new(), audits: Vec::new(), summary: Default::default() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> crate::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> crate::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        self.write(name, text.as_bytes())
    }

    /// Writes a CSV with a header row; each row is already formatted.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> crate::Result<()> {
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> crate::Result<T>) -> crate::Result<T> {
        let t = Instant::now();
        let out = f(self);
        self.stages.push(Stage { name: name.to_string(), wall_seconds: t.elapsed().as_secs_f64() });
        out
    }

    pub fn audit(&mut self, name: impl Into<String>, pass: bool, anchor: impl Into<String>, detail: impl Into<String>) {
        self.audits.push(AuditEntry { name: name.into(), pass, anchor: anchor.into(), detail: detail.into() });
    }

    pub fn summarize<T: Serialize>(&mut self, key: &str, value: T) {
        if let Ok(v) = serde_json::to_value(value) {
            self.summary.insert(key.to_string(), v);
        }
    }
}

/// Result of one scenario run; the manifest has already been written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// Runs a validated configuration and writes its bundle, including the manifest on failure.
pub fn run(config: &RunConfig) -> std::io::Result<RunOutcome> {
    run_in(config, &config.output_dir())
}

pub fn run_in(config: &RunConfig, dir: &Path) -> std::io::Result<RunOutcome> {
    let mut bundle = Bundle::new(dir)?;
    let started = Instant::now();
    let result = scenarios::dispatch(config, &mut bundle);
    let mut errors = Vec::new();
    let mut code = match &result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            errors.push(e.to_string());
            exit_code(e)
        }
    };
    if code == EXIT_OK && bundle.audits.iter().any(|a| !a.pass) {
        code = EXIT_AUDIT;
        errors.extend(bundle.audits.iter().filter(|a| !a.pass).map(|a| format!("audit failed: {}", a.name)));
    }
    bundle.stages.push(Stage { name: "total".into(), wall_seconds: started.elapsed().as_secs_f64() });
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario.name().to_string(),
        config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
        status: Status::from_code(code),
        exit_code: code,
        errors,
        stages: bundle.stages.clone(),
        files: bundle.files.clone(),
        audits: bundle.audits.clone(),
        summary: bundle.summary.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(MANIFEST), text)?;
    Ok(RunOutcome { dir: dir.to_path_buf(), manifest })
}

/// Writes a manifest for a configuration that could not be loaded.
pub fn write_config_failure(dir: &Path, err: &Error) -> std::io::Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: "unknown".into(),
        config: serde_json::Value::Null,
        status: Status::ConfigError,
        exit_code: EXIT_CONFIG,
        errors: vec![err.to_string()],
        stages: Vec::new(),
        files: Vec::new(),
        audits: Vec::new(),
        summary: Default::default(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(MANIFEST), text)?;
    Ok(manifest)
}

fn summary_value(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Human-readable table of a bundle's audits and summary.
pub fn report(dir: &Path) -> crate::Result<String> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Config(format!("corrupt manifest {}: {e}", path.display())))?;
    let mut out = String::new();
    let _ = writeln!(out, "scenario  {}", m.scenario);
    let _ = writeln!(out, "status    {:?} (exit {})", m.status, m.exit_code);
    for e in &m.errors {
        let _ = writeln!(out, "error     {e}");
    }
    if !m.audits.is_empty() {
        let width = m.audits.iter().map(|a| a.name.chars().count()).max().unwrap_or(0).max(5);
        let _ = writeln!(out, "\n{:<width$}  {:<4}  {}", "audit", "", "checks");
        for a in &m.audits {
            let _ = writeln!(out, "{:<width$}  {:<4}  {}", a.name, if a.pass { "PASS" } else { "FAIL" }, a.anchor);
        }
    }
    if !m.summary.is_empty() {
        let width = m.summary.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        let _ = writeln!(out);
        for (k, v) in &m.summary {
            let _ = writeln!(out, "{k:<width$}  {}", summary_value(v));
        }
    }
    let _ = writeln!(out, "\n{} files", m.files.len());
    Ok(out)
}
