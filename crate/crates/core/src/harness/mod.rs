//! Seeded verification suites comparing simulations with exact formulas.

pub mod report;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::io::{self, GeneratorSpec};

pub use report::{CheckRecord, VerificationReport};

pub const DEFAULT_SEED: u64 = 20261016;

pub const SUITES: [&str; 13] = [
    "exact-identities",
    "mu-moments",
    "soup-laplace",
    "gamma-marginal",
    "zeta",
    "wilson",
    "lerw",
    "clusters",
    "ldp",
    "densities",
    "trace-compat",
    "pd-reconstruct",
    "pathwise",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSource {
    Inline(GeneratorSpec),
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub z_max: f64,
    pub p_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { z_max: 3.0, p_min: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    /// Replaces the suite's built-in chain where the suite allows it.
    pub generator: Option<GeneratorSource>,
    /// Replaces the suite's intensities where the suite uses several.
    pub alphas: Vec<f64>,
    /// Replaces the suite's main sample count.
    pub samples: Option<usize>,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Where to write the JSON report.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            suite: String::new(),
            generator: None,
            alphas: Vec::new(),
            samples: None,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(suite: &str) -> Self {
        ExperimentConfig { suite: suite.into(), ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigError(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::ConfigError(m) => Error::ConfigError(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == Some(0) {
            return Err(Error::ConfigError("sample count must be at least 1".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::ConfigError(format!("alpha must be positive, got {a}")));
        }
        if let Some(GeneratorSource::File { path }) = &self.generator {
            if !path.exists() {
                return Err(Error::ConfigError(format!("generator file {} does not exist", path.display())));
            }
        }
        if !(self.tolerances.z_max > 0.0 && self.tolerances.p_min >= 0.0 && self.tolerances.p_min < 1.0) {
            return Err(Error::ConfigError("tolerances out of range".into()));
        }
        Ok(())
    }

    pub fn generator(&self) -> Result<Option<Generator>> {
        match &self.generator {
            None => Ok(None),
            Some(GeneratorSource::Inline(spec)) => spec.build().map(Some),
            Some(GeneratorSource::File { path }) => io::load_generator(path).map(Some),
        }
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    pub fn alphas_or(&self, default: &[f64]) -> Vec<f64> {
        if self.alphas.is_empty() {
            default.to_vec()
        } else {
            self.alphas.clone()
        }
    }
}

/// Runs the configured suite and writes the report when `out` is set.
/// Failed checks are reported, not returned as errors.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    if !SUITES.contains(&cfg.suite.as_str()) {
        return Err(Error::SuiteUnknown(cfg.suite.clone()));
    }
    let start = Instant::now();
    let (checks, notes) = suites::run(cfg)?;
    let report = VerificationReport::new(&cfg.suite, cfg.seed, checks, notes, start.elapsed().as_secs_f64());
    if let Some(path) = &cfg.out {
        std::fs::write(path, report.to_json()).map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
    }
    Ok(report)
}
