//! Experiment configuration (TOML, `version = 1`).
//!
//! ```toml
//! version = 1
//! seed = 0
//! repetitions = 10
//! out_dir = "results"
//! methods = ["rek-baseline", "drek", "mdrek"]
//! gamma = 0.51            # `beta` is accepted as an alias
//!
//! [problem]
//! kind = "randn"          # randn | rank-deficient | duplicated | mtx
//! m = 50
//! n = 30
//! p = 30
//! noise = 1e-5
//!
//! [solver]
//! max_iterations = 50000
//! tolerance = 1e-6
//!
//! [grid]
//! lo = 0.0
//! hi = 0.98
//! step = 0.02
//! budget = 2000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use drek_core::{ResidualMode, SolverConfig};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("unknown method `{0}` (expected drek, mdrek, rek-baseline or rekdr)")]
    UnknownMethod(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodName {
    Drek,
    Mdrek,
    RekBaseline,
    Rekdr,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Drek => "drek",
            MethodName::Mdrek => "mdrek",
            MethodName::RekBaseline => "rek-baseline",
            MethodName::Rekdr => "rekdr",
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "drek" => Ok(MethodName::Drek),
            "mdrek" => Ok(MethodName::Mdrek),
            "rek-baseline" | "rek" | "baseline" => Ok(MethodName::RekBaseline),
            "rekdr" => Ok(MethodName::Rekdr),
            _ => Err(ConfigError::UnknownMethod(s.to_string())),
        }
    }
}

impl TryFrom<String> for MethodName {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MethodName> for String {
    fn from(m: MethodName) -> Self {
        m.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Randn,
    RankDeficient,
    Duplicated,
    Mtx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub n: usize,
    pub p: usize,
    /// Target rank for `rank-deficient`.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Defaults to the top-level seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Matrix Market file for `mtx`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub transpose: bool,
}

fn default_noise() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualModeName {
    Full,
    Incremental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub residual_mode: ResidualModeName,
    pub refresh_interval: usize,
    pub rse_check_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_iterations: d.max_iterations,
            tolerance: d.rse_tolerance,
            residual_mode: ResidualModeName::Full,
            refresh_interval: d.refresh_interval,
            rse_check_stride: d.rse_check_stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Iterations per grid run.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    2000
}

impl GridSpec {
    /// Grid points `lo, lo + step, …` up to `hi` (inclusive within rounding).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSpec {
    pub alpha1: Vec<f64>,
    /// Momentum as a fraction of `γ_max`; overrides `gamma` when set.
    pub gamma_fraction: Option<f64>,
    pub runs: usize,
    pub checkpoints: Vec<usize>,
    pub slack: f64,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self {
            alpha1: vec![drek_core::analysis::DEFAULT_ALPHA1],
            gamma_fraction: None,
            runs: drek_core::analysis::MONTE_CARLO_RUNS,
            checkpoints: vec![1, 10, 50, 100],
            slack: drek_core::analysis::MONTE_CARLO_SLACK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    /// Momentum for `mdrek`.
    #[serde(default, alias = "beta")]
    pub gamma: f64,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub bounds: BoundsSpec,
}

fn default_repetitions() -> usize {
    10
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::RekBaseline, MethodName::Drek, MethodName::Mdrek]
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub methods: Vec<MethodName>,
    pub gamma: Option<f64>,
    pub repetitions: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        // Check the version before the full parse so old files get a clear error.
        #[derive(Deserialize)]
        struct Versioned {
            version: Option<u32>,
        }
        let v: Versioned = toml::from_str(text)?;
        match v.version {
            Some(CONFIG_VERSION) => {}
            Some(other) => return Err(ConfigError::Version(other)),
            None => return Err(ConfigError::Invalid("missing `version`".into())),
        }
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if !o.methods.is_empty() {
            self.methods = o.methods.clone();
        }
        if let Some(g) = o.gamma {
            self.gamma = g;
        }
        if let Some(r) = o.repetitions {
            self.repetitions = r;
        }
        if let Some(k) = o.max_iterations {
            self.solver.max_iterations = k;
        }
        if let Some(t) = o.tolerance {
            self.solver.tolerance = t;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be finite and non-negative, got {}", self.gamma));
        }
        let p = &self.problem;
        if p.p == 0 {
            return bad("problem.p must be at least 1".into());
        }
        if !(p.noise >= 0.0) || !p.noise.is_finite() {
            return bad(format!("problem.noise must be finite and non-negative, got {}", p.noise));
        }
        match p.kind {
            ProblemKind::Mtx if p.path.is_none() => return bad("problem.path is required for kind = \"mtx\"".into()),
            ProblemKind::Randn | ProblemKind::RankDeficient | ProblemKind::Duplicated if p.m == 0 || p.n == 0 => {
                return bad("problem.m and problem.n must be positive".into())
            }
            ProblemKind::RankDeficient if p.rank.is_none() => {
                return bad("problem.rank is required for kind = \"rank-deficient\"".into())
            }
            _ => {}
        }
        if let Some(g) = &self.grid {
            if !(g.step > 0.0) {
                return bad(format!("grid.step must be positive, got {}", g.step));
            }
            if !(g.lo < g.hi) && g.lo != g.hi {
                return bad(format!("grid.lo ({}) must not exceed grid.hi ({})", g.lo, g.hi));
            }
            if !(g.lo >= 0.0) {
                return bad("grid.lo must be non-negative".into());
            }
            if g.budget == 0 {
                return bad("grid.budget must be at least 1".into());
            }
        }
        if self.bounds.alpha1.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return bad("bounds.alpha1 entries must lie in (0, 1)".into());
        }
        if self.bounds.runs == 0 {
            return bad("bounds.runs must be at least 1".into());
        }
        self.solver_config(0.0, 0).validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Solver settings for one run.
    pub fn solver_config(&self, gamma: f64, seed: u64) -> SolverConfig {
        SolverConfig {
            max_iterations: self.solver.max_iterations,
            rse_tolerance: self.solver.tolerance,
            gamma,
            seed,
            residual_mode: match self.solver.residual_mode {
                ResidualModeName::Full => ResidualMode::Full,
                ResidualModeName::Incremental => ResidualMode::Incremental,
            },
            refresh_interval: self.solver.refresh_interval,
            rse_check_stride: self.solver.rse_check_stride,
        }
    }

    /// Momentum used for `method` (zero for everything but `mdrek`).
    pub fn gamma_for(&self, method: MethodName) -> f64 {
        match method {
            MethodName::Mdrek => self.gamma,
            _ => 0.0,
        }
    }

    pub fn problem_seed(&self) -> u64 {
        self.problem.seed.unwrap_or(self.seed)
    }
}
