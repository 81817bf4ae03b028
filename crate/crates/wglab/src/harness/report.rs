//! Versioned run reports with deterministic JSON and CSV renderings.
//!
//! Wall-clock timings are kept out of the serialized forms on purpose: the
//! emitted bytes must be identical across repeated runs and across thread
//! counts, and timings are the one field that never is. They go to stderr.

use super::SCHEMA_VERSION;
use serde::Serialize;
use std::time::Duration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Passed its tolerances but with a caveat worth reading.
    Warn,
    /// Not applicable to the scenario under test.
    Skip,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Warn => "warn",
            CheckStatus::Skip => "skip",
        }
    }
}

/// Outcome of a single named check. `worst` is the check's headline measured
/// quantity and `tolerance` the bound it was held to; the notes say which
/// direction the comparison runs and record secondary measurements.
/// Non-finite `worst` values serialize as JSON `null`; the notes keep the
/// information in that case.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub scenario: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub warned: usize,
    pub skipped: usize,
    pub checks: Vec<CheckResult>,
}

impl RunReport {
    pub fn new(name: String, scenario: String, seed: u64, checks: Vec<CheckResult>) -> Self {
        let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
        Self {
            schema_version: SCHEMA_VERSION,
            name,
            scenario,
            seed,
            passed: count(CheckStatus::Pass),
            failed: count(CheckStatus::Fail),
            warned: count(CheckStatus::Warn),
            skipped: count(CheckStatus::Skip),
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema_version: {}\n", self.schema_version));
        out.push_str(&format!("# name: {}\n", self.name));
        out.push_str(&format!("# scenario: {}\n", self.scenario));
        out.push_str(&format!("# seed: {}\n", self.seed));
        out.push_str("check,status,worst,tolerance,notes\n");
        for c in &self.checks {
            let worst = c.worst.map(|v| format!("{v}")).unwrap_or_default();
            let tol = c.tolerance.map(|v| format!("{v}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&c.name),
                c.status.as_str(),
                worst,
                tol,
                csv_field(&c.notes.join("; ")),
            ));
        }
        out
    }

    /// One human-readable line per check, for terminal output.
    pub fn summary_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let head = match (c.worst, c.tolerance) {
                (Some(w), Some(t)) => format!("  worst {w:.3e}  tol {t:.3e}"),
                (Some(w), None) => format!("  worst {w:.3e}"),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{:>4}  {:<22}{}\n",
                c.status.as_str().to_uppercase(),
                c.name,
                head
            ));
            if c.status != CheckStatus::Pass {
                for n in &c.notes {
                    out.push_str(&format!("      - {n}\n"));
                }
            }
        }
        out.push_str(&format!(
            "{} passed, {} failed, {} warned, {} skipped\n",
            self.passed, self.failed, self.warned, self.skipped
        ));
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("\"{}\"", s.replace('"', "\"\""))
    }
}
