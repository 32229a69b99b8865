use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Whether a failed check aborts the run (exit 3) or only does so under `--strict`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hard,
    Soft,
    /// Reported only.
    Info,
}

/// A reported number with the tolerance it was checked against. Non-finite values
/// serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checked {
    pub value: f64,
    /// `"<="`, `">="` or `"none"`.
    pub check: String,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
    pub severity: Severity,
}

impl Checked {
    /// `value ≤ tolerance`.
    pub fn at_most(value: f64, tolerance: f64, severity: Severity) -> Self {
        Self { value, check: "<=".into(), tolerance: Some(tolerance), pass: Some(value <= tolerance), severity }
    }

    /// `value ≥ tolerance`.
    pub fn at_least(value: f64, tolerance: f64, severity: Severity) -> Self {
        Self { value, check: ">=".into(), tolerance: Some(tolerance), pass: Some(value >= tolerance), severity }
    }

    pub fn info(value: f64) -> Self {
        Self { value, check: "none".into(), tolerance: None, pass: None, severity: Severity::Info }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// One decay fit `|f| ≈ C e^{−αρ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub field: String,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    pub rmse: f64,
    /// Rate predicted by the barrier comparison for the configured threshold.
    pub barrier_alpha: f64,
    pub window: [f64; 2],
    pub samples: usize,
    /// Lower tolerance on `alpha`, when checked.
    pub alpha_min: Option<f64>,
    /// Upper tolerance on `rmse`, when checked.
    pub rmse_max: Option<f64>,
    pub pass: Option<bool>,
    pub severity: Severity,
}

/// Summary of one measured slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub x: f64,
    pub y: f64,
    pub rho: Checked,
    pub volume: Checked,
    pub max_extent: Checked,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceSection {
    pub max_extent: Option<Checked>,
    pub mean_volume: Option<Checked>,
    pub profiles: Vec<SliceEntry>,
    /// Base points whose slice could not be measured, with the reason.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub iterations: usize,
    pub residual: Checked,
    pub residual_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub item: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub exit_code: i32,
    pub error: Option<String>,
    pub hard_failures: Vec<String>,
    pub soft_failures: Vec<String>,
}

/// The machine-readable result of a run. Maps are ordered, so serialization is
/// deterministic and reruns differ only in `timestamp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub timestamp: String,
    pub stage: String,
    pub grid: Option<GridSummary>,
    pub solver: Option<SolverSection>,
    pub bounds: BTreeMap<String, Checked>,
    pub identities: BTreeMap<String, Checked>,
    pub decay_fits: Vec<DecayEntry>,
    pub domain_checks: BTreeMap<String, Checked>,
    pub slice_volumes: SliceSection,
    pub open_question_ratios: BTreeMap<String, Checked>,
    pub skipped: Vec<Skipped>,
    pub status: Status,
}

impl Report {
    pub fn new(seed: u64, timestamp: String, stage: &str) -> Self {
        Self {
            seed,
            timestamp,
            stage: stage.to_string(),
            grid: None,
            solver: None,
            bounds: BTreeMap::new(),
            identities: BTreeMap::new(),
            decay_fits: Vec::new(),
            domain_checks: BTreeMap::new(),
            slice_volumes: SliceSection::default(),
            open_question_ratios: BTreeMap::new(),
            skipped: Vec::new(),
            status: Status::default(),
        }
    }

    pub fn skip(&mut self, item: &str, reason: impl Into<String>) {
        self.skipped.push(Skipped { item: item.to_string(), reason: reason.into() });
    }

    /// Names of failed checks of the given severity, section-qualified.
    pub fn failures(&self, severity: Severity) -> Vec<String> {
        let mut out = Vec::new();
        let mut scan = |section: &str, map: &BTreeMap<String, Checked>| {
            for (k, c) in map {
                if c.severity == severity && c.failed() {
                    out.push(format!("{section}.{k}"));
                }
            }
        };
        scan("bounds", &self.bounds);
        scan("identities", &self.identities);
        scan("domain_checks", &self.domain_checks);
        scan("open_question_ratios", &self.open_question_ratios);
        for d in &self.decay_fits {
            if d.severity == severity && d.pass == Some(false) {
                out.push(format!("decay_fits.{}", d.field));
            }
        }
        let sv = &self.slice_volumes;
        for (name, c) in [("max_extent", &sv.max_extent), ("mean_volume", &sv.mean_volume)] {
            if let Some(c) = c {
                if c.severity == severity && c.failed() {
                    out.push(format!("slice_volumes.{name}"));
                }
            }
        }
        if severity == Severity::Soft && !sv.failures.is_empty() {
            out.push(format!("slice_volumes.failures ({})", sv.failures.len()));
        }
        if let Some(s) = &self.solver {
            if s.residual.severity == severity && s.residual.failed() {
                out.push("solver.residual".into());
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_report_has_every_section() {
        let r = Report::new(7, "2026-01-01T00:00:00Z".into(), "solve");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["bounds", "identities", "decay_fits", "domain_checks", "slice_volumes", "open_question_ratios", "seed", "timestamp"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn failures_are_collected_by_severity() {
        let mut r = Report::new(0, String::new(), "all");
        r.bounds.insert("K_max".into(), Checked::at_most(1.0, 1e-8, Severity::Hard));
        r.domain_checks.insert("growth_min_slack".into(), Checked::at_least(-1.0, 0.0, Severity::Soft));
        r.domain_checks.insert("harnack".into(), Checked::info(f64::NAN));
        assert_eq!(r.failures(Severity::Hard), vec!["bounds.K_max".to_string()]);
        assert_eq!(r.failures(Severity::Soft), vec!["domain_checks.growth_min_slack".to_string()]);
        assert!(r.to_json().contains("\"value\": null"));
    }

    #[test]
    fn decay_entry_uses_the_documented_keys() {
        let e = DecayEntry {
            field: "abs_mu2".into(),
            c: 1.0,
            alpha: 0.8,
            rmse: 0.1,
            barrier_alpha: 0.7,
            window: [2.0, 10.0],
            samples: 40,
            alpha_min: Some(0.65),
            rmse_max: None,
            pass: Some(true),
            severity: Severity::Soft,
        };
        let v = serde_json::to_value(&e).unwrap();
        for key in ["field", "C", "alpha", "rmse", "barrier_alpha"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
