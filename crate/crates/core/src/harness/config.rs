//! TOML run configuration.
//!
//! ```toml
//! mode = "short"            # short | long | ladder | verify | oracle
//!
//! [basis]
//! alpha = [1.0]
//! omega = 3.883222077450933 # golden angle when omitted
//! rho = 0.2
//! iota = 1.0
//!
//! [index]
//! radius = 32
//! s = 1.0
//!
//! [potential]               # U = d_alpha V + force + constant
//! constant = 0.0
//! potential = [{ k = [1], amp = 0.05 }]
//! force = [{ k = [1], amp = 0.01, kind = "sin" }]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::cohomology::{DivisorFloor, FloorPolicy};
use crate::diophantine::DiophantineStyle;
use crate::fourier::golden_omega;
use crate::short_range::SolveOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("config field `{path}`: {reason}")]
    Field { path: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Short,
    Long,
    Ladder,
    Verify,
    Oracle,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Short => "short",
            Mode::Long => "long",
            Mode::Ladder => "ladder",
            Mode::Verify => "verify",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Cos,
    Sin,
}

/// `amp cos(k.sigma + phase)` or `amp sin(k.sigma + phase)`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub k: Vec<i32>,
    pub amp: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub kind: Kind,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub alpha: Vec<f64>,
    pub omega: Option<f64>,
    pub rho: f64,
    #[serde(default = "default_iota")]
    pub iota: f64,
}

fn default_iota() -> f64 {
    1.0
}

impl BasisConfig {
    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or_else(golden_omega)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    /// Active frequencies; defaults to the length of `basis.alpha`.
    pub n: Option<usize>,
    pub radius: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    pub cap: Option<usize>,
}

fn default_s() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default)]
    pub constant: f64,
    /// Terms of `V`; the force gets `d_alpha V`.
    #[serde(default)]
    pub potential: Vec<TermSpec>,
    /// Terms added to the force directly.
    #[serde(default)]
    pub force: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_div_floor")]
    pub divergence_floor: f64,
    #[serde(default = "d_cap")]
    pub condition_cap: f64,
    #[serde(default = "d_floor")]
    pub divisor_floor: f64,
    #[serde(default = "d_policy")]
    pub floor_policy: FloorPolicy,
    pub rho_limit: Option<f64>,
    pub report_rho: Option<f64>,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "d_vanish")]
    pub vanish_tol: f64,
}

fn d_tol() -> f64 {
    1e-12
}
fn d_max_iter() -> usize {
    40
}
fn d_div_floor() -> f64 {
    1e-10
}
fn d_cap() -> f64 {
    1e8
}
fn d_floor() -> f64 {
    1e-14
}
fn d_policy() -> FloorPolicy {
    FloorPolicy::Error
}
fn d_tau() -> f64 {
    1.0
}
fn d_vanish() -> f64 {
    1e-10
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: d_tol(),
            max_iter: d_max_iter(),
            divergence_floor: d_div_floor(),
            condition_cap: d_cap(),
            divisor_floor: d_floor(),
            floor_policy: d_policy(),
            rho_limit: None,
            report_rho: None,
            tau: d_tau(),
            vanish_tol: d_vanish(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> Result<SolveOptions, ConfigError> {
        let floor = DivisorFloor::new(self.divisor_floor, self.floor_policy)
            .ok_or_else(|| ConfigError::Invalid(format!("divisor_floor must be positive, got {}", self.divisor_floor)))?;
        Ok(SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            divergence_floor: self.divergence_floor,
            condition_cap: self.condition_cap,
            floor,
            rho_limit: self.rho_limit,
            report_rho: self.report_rho,
            tau: self.tau,
            vanish_tol: self.vanish_tol,
            ..SolveOptions::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayTarget {
    pub l: usize,
    pub target: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongConfig {
    /// Record file, relative to the config file.
    pub file: Option<PathBuf>,
    /// Inline records in the same format.
    pub records: Option<String>,
    /// Add `H_0 = -V`, `H_1 = (x_1 - x_0)^2 / 2` from `[potential]`.
    #[serde(default)]
    pub short_reduction: bool,
    #[serde(default)]
    pub decay: Vec<DecayTarget>,
    pub mean_tol: Option<f64>,
    pub fixed_point_tol: Option<f64>,
    pub fixed_point_max: Option<usize>,
    pub require_contraction: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub alpha: f64,
    #[serde(default)]
    pub force: Vec<TermSpec>,
    #[serde(default = "d_nu")]
    pub nu: f64,
    #[serde(default = "d_tau")]
    pub tau: f64,
}

fn d_nu() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub rho_inf: f64,
    pub levels: Vec<LevelConfig>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "d_true")]
    pub dense: bool,
    /// Grid points per frequency for the dense oracle; default `4 K + 16`.
    pub grid: Option<usize>,
    pub p: Option<i64>,
    pub q: Option<usize>,
    #[serde(default = "d_oracle_tol")]
    pub tol: f64,
}

fn d_true() -> bool {
    true
}
fn d_oracle_tol() -> f64 {
    1e-13
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Hull dump, relative to the config file.
    pub hull: PathBuf,
    #[serde(default)]
    pub lambda: f64,
    /// Verify against the long-range model instead of the short one.
    #[serde(default)]
    pub long: bool,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophantineConfig {
    pub nu: f64,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "d_style")]
    pub style: DiophantineStyle,
}

fn d_style() -> DiophantineStyle {
    DiophantineStyle::Product
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub output: Option<PathBuf>,
    pub basis: BasisConfig,
    pub index: IndexConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub long: Option<LongConfig>,
    pub ladder: Option<LadderConfig>,
    pub oracle: Option<OracleConfig>,
    pub verify: Option<VerifyConfig>,
    pub diophantine: Option<DiophantineConfig>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Parse TOML text; errors name the offending field path.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Field {
            path: "<document>".into(),
            reason: e.to_string(),
        })?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Field {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn n(&self) -> usize {
        self.index.n.unwrap_or(self.basis.alpha.len())
    }

    fn check_files(&self) -> Result<(), ConfigError> {
        let mut files = Vec::new();
        if let Some(f) = self.long.as_ref().and_then(|l| l.file.as_ref()) {
            files.push(("long.file", f));
        }
        if let Some(v) = &self.verify {
            files.push(("verify.hull", &v.hull));
        }
        for (field, f) in files {
            let p = self.resolve(f);
            if !p.is_file() {
                return Err(ConfigError::Field {
                    path: field.into(),
                    reason: format!("file {} does not exist", p.display()),
                });
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let field = |path: &str, reason: String| ConfigError::Field { path: path.into(), reason };
        if self.basis.alpha.is_empty() {
            return Err(field("basis.alpha", "needs at least one frequency".into()));
        }
        if !(self.basis.rho > 0.0) {
            return Err(field("basis.rho", format!("must be positive, got {}", self.basis.rho)));
        }
        if !(self.basis.iota > 0.0) {
            return Err(field("basis.iota", format!("must be positive, got {}", self.basis.iota)));
        }
        if !(self.index.radius > 0.0) {
            return Err(field("index.radius", format!("must be positive, got {}", self.index.radius)));
        }
        if !(self.index.s > 0.0) {
            return Err(field("index.s", format!("must be positive, got {}", self.index.s)));
        }
        if self.n() == 0 || self.n() > self.basis.alpha.len() {
            return Err(field("index.n", format!("must lie in 1..={}", self.basis.alpha.len())));
        }
        if !(self.solver.tol > 0.0) {
            return Err(field("solver.tol", format!("must be positive, got {}", self.solver.tol)));
        }
        let n = self.n();
        let terms = self.potential.potential.iter().map(|t| ("potential.potential", t));
        for (name, t) in terms.chain(self.potential.force.iter().map(|t| ("potential.force", t))) {
            if t.k.len() > n {
                return Err(field(name, format!("mode {:?} has more than {n} entries", t.k)));
            }
        }
        if let Some(l) = &self.ladder {
            if !(l.rho_inf > 0.0 && l.rho_inf < self.basis.rho) {
                return Err(field("ladder.rho_inf", format!("need 0 < rho_inf < rho, got {}", l.rho_inf)));
            }
            if l.levels.is_empty() {
                return Err(field("ladder.levels", "needs at least one level".into()));
            }
        }
        if let Some(o) = &self.oracle {
            if let (Some(p), Some(q)) = (o.p, o.q) {
                if q == 0 || gcd(p.unsigned_abs(), q as u64) != 1 {
                    return Err(field("oracle.q", format!("p/q = {p}/{q} must be in lowest terms")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "mode = \"short\"\n[basis]\nalpha = [1.0]\nrho = 0.2\n[index]\nradius = 16\n";

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(c.mode, Some(Mode::Short));
        assert_eq!(c.n(), 1);
        assert_eq!(c.basis.omega(), golden_omega());
        assert_eq!(c.solver.options().unwrap(), SolveOptions::default());
    }

    #[test]
    fn field_paths_in_errors() {
        let bad = BASE.replace("rho = 0.2", "rho = \"x\"");
        match RunConfig::from_toml(&bad) {
            Err(ConfigError::Field { path, .. }) => assert_eq!(path, "basis.rho"),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{BASE}[solver]\ntoll = 1e-3\n");
        match RunConfig::from_toml(&unknown) {
            Err(ConfigError::Field { path, reason }) => {
                assert_eq!(path, "solver.toll");
                assert!(reason.contains("toll"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        let neg = BASE.replace("radius = 16", "radius = -1");
        assert!(matches!(RunConfig::from_toml(&neg), Err(ConfigError::Field { path, .. }) if path == "index.radius"));
        let terms = format!("{BASE}[potential]\nforce = [{{ k = [1], amp = 0.1, kind = \"tan\" }}]\n");
        assert!(matches!(RunConfig::from_toml(&terms), Err(ConfigError::Field { path, .. }) if path.starts_with("potential.force")));
    }

    #[test]
    fn missing_files_rejected() {
        let dir = std::env::temp_dir().join("fkhull-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("run.toml");
        std::fs::write(&p, format!("{BASE}[verify]\nhull = \"nope.coeffs\"\n")).unwrap();
        assert!(matches!(RunConfig::load(&p), Err(ConfigError::Field { path, .. }) if path == "verify.hull"));
    }

    #[test]
    fn oracle_fraction_checked() {
        let c = format!("{BASE}[oracle]\np = 4\nq = 6\n");
        assert!(RunConfig::from_toml(&c).is_err());
        let ok = format!("{BASE}[oracle]\np = 233\nq = 377\n");
        assert!(RunConfig::from_toml(&ok).is_ok());
    }
}
