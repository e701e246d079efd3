//! Report formats: the versioned JSON report, per-curve CSV files and a
//! plain-text summary table.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Error,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Combination rule for aggregates: any error dominates, then fail,
    /// then inconclusive.
    pub fn combine(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Error, _) | (_, Error) => Error,
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
            Status::Error => "error",
        }
    }
}

/// Comparison a check applies to its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "in")]
    Within,
    #[serde(rename = "true")]
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub op: Op,
    pub threshold: Option<f64>,
    pub threshold_hi: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            op: Op::Le,
            threshold: Some(threshold),
            threshold_hi: None,
            status: Status::from_bool(value <= threshold),
            note: None,
        }
    }

    pub fn ge(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            op: Op::Ge,
            threshold: Some(threshold),
            threshold_hi: None,
            status: Status::from_bool(value >= threshold),
            note: None,
        }
    }

    pub fn gt(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            op: Op::Gt,
            threshold: Some(threshold),
            threshold_hi: None,
            status: Status::from_bool(value > threshold),
            note: None,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            op: Op::Within,
            threshold: Some(lo),
            threshold_hi: Some(hi),
            status: Status::from_bool(value >= lo && value <= hi),
            note: None,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: None,
            op: Op::Holds,
            threshold: None,
            threshold_hi: None,
            status: Status::from_bool(ok),
            note: None,
        }
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// A log-log power fit judged against an expected exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    pub name: String,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: usize,
    pub expected: f64,
    pub tolerance: f64,
    pub status: Status,
}

impl FitRecord {
    /// |slope − expected| ≤ tolerance; inconclusive without a fit or with
    /// R² below `r_squared_min`.
    pub fn two_sided(
        name: impl Into<String>,
        fit: Option<&scatspec_core::fit::PowerFit>,
        expected: f64,
        tolerance: f64,
        r_squared_min: f64,
    ) -> Self {
        Self::judge(name, fit, expected, tolerance, r_squared_min, |s| (s - expected).abs() <= tolerance)
    }

    /// slope ≤ expected + tolerance.
    pub fn at_most(
        name: impl Into<String>,
        fit: Option<&scatspec_core::fit::PowerFit>,
        expected: f64,
        tolerance: f64,
        r_squared_min: f64,
    ) -> Self {
        Self::judge(name, fit, expected, tolerance, r_squared_min, |s| s <= expected + tolerance)
    }

    fn judge(
        name: impl Into<String>,
        fit: Option<&scatspec_core::fit::PowerFit>,
        expected: f64,
        tolerance: f64,
        r_squared_min: f64,
        ok: impl Fn(f64) -> bool,
    ) -> Self {
        let status = match fit {
            None => Status::Inconclusive,
            Some(f) if f.r_squared.is_nan() || f.r_squared < r_squared_min => Status::Inconclusive,
            Some(f) => Status::from_bool(ok(f.slope)),
        };
        FitRecord {
            name: name.into(),
            slope: fit.map(|f| f.slope),
            r_squared: fit.map(|f| f.r_squared),
            points: fit.map_or(0, |f| f.points),
            expected,
            tolerance,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteBlock {
    pub suite: String,
    pub status: Status,
    /// Effective parameters of the run, echoed from the configuration.
    pub inputs: serde_json::Value,
    pub checks: Vec<Check>,
    pub fits: Vec<FitRecord>,
    /// CSV files written by the suite, relative to the output directory.
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteBlock {
    pub fn new(suite: &str, inputs: serde_json::Value) -> Self {
        SuiteBlock {
            suite: suite.to_string(),
            status: Status::Pass,
            inputs,
            checks: Vec::new(),
            fits: Vec::new(),
            artifacts: Vec::new(),
            wall_time_s: 0.0,
            error: None,
        }
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn fit(&mut self, fit: FitRecord) {
        self.fits.push(fit);
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn find_fit(&self, name: &str) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.name == name)
    }

    /// Recomputes `status` from the checks and fits.
    pub fn finish(&mut self) {
        let mut s = Status::Pass;
        for c in &self.checks {
            s = s.combine(c.status);
        }
        for f in &self.fits {
            s = s.combine(f.status);
        }
        if self.error.is_some() {
            s = Status::Error;
        }
        self.status = s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridStanza {
    pub oversampling: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    /// SHA-256 of the canonical configuration after overrides.
    pub config_hash: String,
    pub seed: u64,
    pub grid: GridStanza,
    pub overall: Status,
    pub suites: Vec<SuiteBlock>,
}

impl Report {
    pub fn new(config_hash: String, seed: u64, grid: GridStanza) -> Self {
        Report { schema_version: SCHEMA_VERSION, config_hash, seed, grid, overall: Status::Pass, suites: Vec::new() }
    }

    /// Inserts a suite block keeping the list ordered by suite name.
    pub fn push(&mut self, block: SuiteBlock) {
        let at = self.suites.partition_point(|b| b.suite < block.suite);
        self.suites.insert(at, block);
        self.overall = self.suites.iter().fold(Status::Pass, |s, b| s.combine(b.status));
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteBlock> {
        self.suites.iter().find(|b| b.suite == name)
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Parses and validates a report against this schema.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let report: Report = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(vec![format!(
                "report schema version {} is not {SCHEMA_VERSION}",
                report.schema_version
            )]));
        }
        Ok(report)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("scatspec report  schema v{}  config {}\n", self.schema_version, &self.config_hash[..12]);
        out += &format!("overall: {}\n\n", self.overall.as_str());
        for b in &self.suites {
            out += &format!("[{}] {}\n", b.suite, b.status.as_str());
            if let Some(e) = &b.error {
                out += &format!("  error: {e}\n");
            }
            for c in &b.checks {
                let value = c.value.map_or("-".to_string(), |v| format!("{v:.6e}"));
                let bound = match (c.op, c.threshold, c.threshold_hi) {
                    (Op::Within, Some(lo), Some(hi)) => format!("in [{}, {}]", short(lo), short(hi)),
                    (Op::Le, Some(t), _) => format!("<= {}", short(t)),
                    (Op::Ge, Some(t), _) => format!(">= {}", short(t)),
                    (Op::Gt, Some(t), _) => format!("> {}", short(t)),
                    _ => String::new(),
                };
                out += &format!("  {:<13} {:<52} {:>14} {}\n", c.status.as_str(), c.name, value, bound);
                if let Some(note) = &c.note {
                    out += &format!("  {:<13} ({note})\n", "");
                }
            }
            for f in &b.fits {
                let slope = f.slope.map_or("-".to_string(), |v| format!("{v:.4}"));
                let r2 = f.r_squared.map_or("-".to_string(), |v| format!("{v:.4}"));
                out += &format!(
                    "  {:<13} {:<52} slope {} (expected {} ± {}, R² {})\n",
                    f.status.as_str(),
                    f.name,
                    slope,
                    f.expected,
                    f.tolerance,
                    r2
                );
            }
            out.push('\n');
        }
        out
    }
}

/// Output directory with helpers for the files a run produces.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    /// Writes one CSV curve and returns its file name.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<String, CliError> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format_number(*v)))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(name.to_string())
    }

    pub fn write_report(&self, report: &Report) -> Result<(), CliError> {
        let json = self.root.join("report.json");
        fs::write(&json, report.to_json()?).map_err(|e| CliError::io(&json, e))?;
        let summary = self.root.join("summary.txt");
        fs::write(&summary, report.summary()).map_err(|e| CliError::io(&summary, e))
    }
}

fn short(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{}", (v * 1e6).round() / 1e6)
    } else {
        format!("{v:e}")
    }
}

/// Shortest representation that round-trips; NaN is written as "nan".
fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_combination_order() {
        use Status::*;
        assert_eq!(Pass.combine(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.combine(Fail), Fail);
        assert_eq!(Fail.combine(Error), Error);
        assert_eq!(Pass.combine(Pass), Pass);
    }

    #[test]
    fn report_round_trips_and_rejects_unknown_fields() {
        let mut r = Report::new("ab".repeat(32), 7, GridStanza { oversampling: 8.0, spacing: 0.1 });
        let mut b = SuiteBlock::new("hardy", serde_json::json!({"nodes": 4096}));
        b.check(Check::within("x", 1.0, 0.5, 2.0));
        b.check(Check::le("y", 3.0, 1.0).note("too big"));
        b.finish();
        r.push(b);
        assert_eq!(r.overall, Status::Fail);
        let text = r.to_json().unwrap();
        assert_eq!(Report::from_json(&text).unwrap(), r);
        let tampered = text.replacen("\"seed\"", "\"extra\": 1, \"seed\"", 1);
        assert!(Report::from_json(&tampered).is_err());
    }

    #[test]
    fn suites_are_kept_in_name_order() {
        let mut r = Report::new("00".repeat(32), 0, GridStanza { oversampling: 1.0, spacing: 1.0 });
        for name in ["wave", "hardy", "mourre"] {
            r.push(SuiteBlock::new(name, serde_json::Value::Null));
        }
        let names: Vec<&str> = r.suites.iter().map(|b| b.suite.as_str()).collect();
        assert_eq!(names, ["hardy", "mourre", "wave"]);
    }
}
