use serde::Serialize;

/// One comparison of an estimate or computed value against its reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Tag of the formula that produced `exact`.
    pub formula: String,
    pub exact: Option<f64>,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    /// Absolute or relative error, whichever the check uses.
    pub error: Option<f64>,
    /// `|z|` bound, minimal p-value or error bound.
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn blank(name: &str, formula: &str, threshold: f64) -> Self {
        CheckRecord {
            name: name.into(),
            formula: formula.into(),
            exact: None,
            estimate: None,
            std_error: None,
            z: None,
            p_value: None,
            error: None,
            threshold,
            pass: false,
        }
    }

    /// Monte Carlo mean against an exact value: `|z| < z_max`.
    pub fn z(name: &str, formula: &str, exact: f64, estimate: f64, se: f64, z_max: f64) -> Self {
        let z = crate::stats::z_score(estimate, exact, se);
        CheckRecord {
            exact: Some(exact),
            estimate: Some(estimate),
            std_error: Some(se),
            z: Some(z),
            pass: z.abs() < z_max,
            ..Self::blank(name, formula, z_max)
        }
    }

    /// Distributional test: `p > p_min`.
    pub fn p(name: &str, formula: &str, statistic: f64, p: f64, p_min: f64) -> Self {
        CheckRecord { estimate: Some(statistic), p_value: Some(p), pass: p > p_min, ..Self::blank(name, formula, p_min) }
    }

    /// Deterministic agreement: `|estimate - exact| <= tol`.
    pub fn abs(name: &str, formula: &str, exact: f64, estimate: f64, tol: f64) -> Self {
        let err = (estimate - exact).abs();
        CheckRecord {
            exact: Some(exact),
            estimate: Some(estimate),
            error: Some(err),
            pass: err <= tol,
            ..Self::blank(name, formula, tol)
        }
    }

    /// `|estimate - exact| / |exact| <= tol`.
    pub fn rel(name: &str, formula: &str, exact: f64, estimate: f64, tol: f64) -> Self {
        let err = (estimate - exact).abs() / exact.abs();
        CheckRecord {
            exact: Some(exact),
            estimate: Some(estimate),
            error: Some(err),
            pass: err <= tol,
            ..Self::blank(name, formula, tol)
        }
    }

    /// A non-negative discrepancy that must stay below `bound`.
    pub fn below(name: &str, formula: &str, value: f64, bound: f64) -> Self {
        CheckRecord { error: Some(value), pass: value < bound, ..Self::blank(name, formula, bound) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    pub notes: Vec<String>,
    pub runtime_secs: f64,
}

/// Suites with more checks than this carry a multiple-testing note.
pub const BONFERRONI_THRESHOLD: usize = 20;

impl VerificationReport {
    pub fn new(suite: &str, seed: u64, checks: Vec<CheckRecord>, mut notes: Vec<String>, runtime_secs: f64) -> Self {
        let stochastic = checks.iter().filter(|c| c.z.is_some() || c.p_value.is_some()).count();
        if checks.len() > BONFERRONI_THRESHOLD {
            notes.push(format!(
                "{} checks ({stochastic} statistical) at per-check thresholds; a Bonferroni-corrected family level \
                 would divide the p-value threshold by {stochastic}",
                checks.len()
            ));
        }
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport { suite: suite.into(), seed, checks, pass, notes, runtime_secs }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}
