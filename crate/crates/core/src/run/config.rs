//! Scenario configuration: one TOML file plus `key=value` overrides.

use crate::beltrami::LipschitzSpec;
use crate::diagnostics::Side;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "MONOPLANE_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Catalog,
    Classify,
    Transform,
    Solve,
    Diagnose,
    Counterexample,
    Certify,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Catalog => "catalog",
            Scenario::Classify => "classify",
            Scenario::Transform => "transform",
            Scenario::Solve => "solve",
            Scenario::Diagnose => "diagnose",
            Scenario::Counterexample => "counterexample",
            Scenario::Certify => "certify",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "MeshConfig::default_h")]
    pub h: f64,
}

impl MeshConfig {
    fn default_h() -> f64 {
        1.0 / 16.0
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { h: Self::default_h() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub lambda: Option<f64>,
    #[serde(rename = "Lambda")]
    pub upper: Option<f64>,
    pub r: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    /// Lebesgue number override for the monotony-floor interval; the covering's own by default.
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    /// Half side of the square profile box.
    pub box_half: f64,
    pub step: f64,
    pub scales: Vec<f64>,
    pub directions: usize,
    /// Pairs for the monotonicity audit.
    pub pairs: usize,
    /// Disc radius for the monotonicity audit.
    pub radius: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { box_half: 2.0, step: 0.1, scales: vec![1.0, 0.1, 0.01, 0.001], directions: 16, pairs: 100_000, radius: 5.0 }
    }
}

/// Boundary data `c + Σ_k a_k cos(kθ) + b_k sin(kθ)`, `k` starting at 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Boundary {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Boundary {
    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * ((k + 1) as f64 * theta).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * ((k + 1) as f64 * theta).sin();
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub continuation: Vec<f64>,
    pub max_newton: usize,
    pub conjugate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, continuation: Vec::new(), max_newton: 60, conjugate: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseConfig {
    pub deltas: Vec<f64>,
    pub maxmin_r: f64,
    pub maxmin_fraction: f64,
    pub alpha_factor: f64,
    pub band_factor: f64,
    pub xi0: [f64; 2],
    pub rho: f64,
    pub side: Side,
    pub threshold: f64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            deltas: vec![0.5, 0.25, 0.1, 0.05],
            maxmin_r: 0.5,
            maxmin_fraction: 0.05,
            alpha_factor: 2.0,
            band_factor: 2.0,
            xi0: [10.0, 0.0],
            rho: 1.0,
            side: Side::OLambda,
            threshold: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub grad_l2: f64,
    pub g_grad_l2: f64,
    pub c0: f64,
    pub c_iter: f64,
    pub safety: f64,
    /// Bad-set centers; detected from the profile when empty.
    pub centers: Vec<[f64; 2]>,
    /// Fixed monotony floor; estimated by sampling when absent.
    pub floor: Option<f64>,
    pub floor_grid: usize,
    pub floor_samples: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            grad_l2: 1.0,
            g_grad_l2: 1.0,
            c0: 1.0,
            c_iter: 1.0,
            safety: 0.5,
            centers: Vec::new(),
            floor: None,
            floor_grid: 8,
            floor_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Format {
    pub csv: bool,
    pub svg: bool,
}

impl Default for Format {
    fn default() -> Self {
        Format { csv: true, svg: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    /// Beltrami datum for the transform scenario.
    #[serde(default)]
    pub beltrami: Option<LipschitzSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub format: Format,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Schema checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        let needs_field = matches!(self.scenario, Scenario::Classify | Scenario::Solve | Scenario::Diagnose | Scenario::Certify);
        if needs_field && self.field.is_none() {
            return Err(config_err(format!("scenario '{}' needs a field", self.scenario.name())));
        }
        if self.scenario == Scenario::Transform && self.field.is_none() && self.beltrami.is_none() {
            return Err(config_err("scenario 'transform' needs a field or a beltrami datum"));
        }
        if !(self.mesh.h > 0.0 && self.mesh.h <= 0.5) {
            return Err(config_err(format!("mesh.h must lie in (0, 0.5], got {}", self.mesh.h)));
        }
        let s = &self.sampling;
        positive("sampling.box_half", s.box_half)?;
        positive("sampling.step", s.step)?;
        positive("sampling.radius", s.radius)?;
        if s.scales.is_empty() || s.scales.iter().any(|v| !(*v > 0.0)) || s.scales.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("sampling.scales must be positive and strictly decreasing"));
        }
        if s.directions < crate::classify::MIN_DIRECTIONS {
            return Err(config_err(format!("sampling.directions must be at least {}", crate::classify::MIN_DIRECTIONS)));
        }
        if s.pairs == 0 {
            return Err(config_err("sampling.pairs must be positive"));
        }
        positive("solver.tol", self.solver.tol)?;
        if self.solver.continuation.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(config_err("solver.continuation entries must lie in (0, 1)"));
        }
        let t = &self.thresholds;
        for (name, v) in [("lambda", t.lambda), ("Lambda", t.upper), ("r", t.r), ("M", t.m), ("eta", t.eta)] {
            if let Some(v) = v {
                positive(&format!("thresholds.{name}"), v)?;
            }
        }
        if self.scenario == Scenario::Certify {
            for (name, v) in [("lambda", t.lambda), ("Lambda", t.upper), ("r", t.r), ("M", t.m)] {
                if v.is_none() {
                    return Err(config_err(format!("scenario 'certify' needs thresholds.{name}")));
                }
            }
        }
        let d = &self.diagnose;
        if d.deltas.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(config_err("diagnose.deltas must lie in (0, 1]"));
        }
        if !(d.maxmin_r > 0.0 && d.maxmin_r < 1.0) {
            return Err(config_err("diagnose.maxmin_r must lie in (0, 1)"));
        }
        positive("diagnose.rho", d.rho)?;
        positive("diagnose.threshold", d.threshold)?;
        Ok(())
    }

    /// Output directory: the configured one, else `$MONOPLANE_OUT/<scenario>`, else
    /// `monoplane-out/<scenario>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(p) = &self.output {
            return p.clone();
        }
        let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("monoplane-out"));
        root.join(self.scenario.name())
    }
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn override_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Applies `a.b.c=value` to a TOML table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{assignment}' is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("override key '{key}' is malformed")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| config_err(format!("override key '{key}' descends into a non-table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), override_value(value.trim()));
    Ok(())
}

/// Parses, overrides and validates a configuration text.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides)
}
