//! Report emission: `report.json`, one CSV per curve and `timings.json`.
//!
//! Floating-point values in the report and the CSV files are written with
//! 17 significant digits (`{:.16e}`), as decimal strings in JSON, so a report
//! reproduces every bit of the computed numbers and two runs with the same
//! configuration and seed produce byte-identical files. Wall-clock timings
//! vary between runs and therefore live in the separate `timings.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::suites::{Check, Curve, Relation, SuiteOutcome, Value};

pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// Decimal string with 17 significant digits.
pub fn exact(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Skipped,
    /// The suite aborted with a numerical error.
    Error,
}

/// Result of one suite as recorded in the report.
#[derive(Debug, Clone)]
pub struct SuiteRecord {
    pub name: String,
    pub anchor: String,
    pub outcome: SuiteOutcome,
    pub error: Option<String>,
    pub seconds: f64,
}

impl SuiteRecord {
    pub fn status(&self) -> Status {
        if self.error.is_some() {
            Status::Error
        } else if self.outcome.skipped.is_some() {
            Status::Skipped
        } else if self.outcome.passed() {
            Status::Passed
        } else {
            Status::Failed
        }
    }

    pub fn passed(&self) -> bool {
        !matches!(self.status(), Status::Failed | Status::Error)
    }

    pub fn csv_name(&self, curve: &Curve) -> String {
        format!("{}_{}.csv", self.name, curve.name)
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: String,
    pub field: String,
    pub config: ExperimentConfig,
    pub suites: Vec<SuiteRecord>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteRecord::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteRecord> {
        self.suites.iter().find(|s| s.name == name)
    }

    /// `suite: check (value relation threshold)` for every failed check, and
    /// `suite: error` for aborted suites.
    pub fn failures(&self) -> Vec<String> {
        let mut out = vec![];
        for s in &self.suites {
            if let Some(e) = &s.error {
                out.push(format!("{}: {e}", s.name));
            }
            for c in s.outcome.failed_checks() {
                out.push(format!(
                    "{}: {} ({} {} {})",
                    s.name,
                    c.name,
                    exact(c.value),
                    relation_str(c.relation),
                    exact(c.threshold)
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ReportDoc {
            version: env!("CARGO_PKG_VERSION"),
            experiment: &self.experiment,
            field: &self.field,
            seed: self.config.seed,
            passed: self.passed(),
            config: &self.config,
            suites: self.suites.iter().map(SuiteDoc::from).collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    pub fn timings_json(&self) -> Result<String> {
        let rows: Vec<TimingDoc> = self
            .suites
            .iter()
            .map(|s| TimingDoc {
                suite: &s.name,
                seconds: s.seconds,
            })
            .collect();
        let mut text = serde_json::to_string_pretty(&rows)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes the report, the timings and the curves into `dir`; returns the
    /// paths written, report first.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = vec![];
        let report = dir.join(REPORT_FILE);
        fs::write(&report, self.to_json()?)?;
        written.push(report);
        for s in &self.suites {
            for c in &s.outcome.curves {
                let path = dir.join(s.csv_name(c));
                write_curve(c, &path)?;
                written.push(path);
            }
        }
        let timings = dir.join(TIMINGS_FILE);
        fs::write(&timings, self.timings_json()?)?;
        written.push(timings);
        Ok(written)
    }
}

fn relation_str(r: Relation) -> &'static str {
    match r {
        Relation::AtMost => "<=",
        Relation::AtLeast => ">=",
    }
}

pub fn write_curve(curve: &Curve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&curve.header)?;
    for row in &curve.rows {
        w.write_record(row.iter().map(|v| exact(*v)))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    version: &'static str,
    experiment: &'a str,
    field: &'a str,
    seed: u64,
    passed: bool,
    config: &'a ExperimentConfig,
    suites: Vec<SuiteDoc<'a>>,
}

#[derive(Serialize)]
struct SuiteDoc<'a> {
    name: &'a str,
    anchor: &'a str,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
    checks: Vec<CheckDoc<'a>>,
    values: serde_json::Map<String, serde_json::Value>,
    curves: Vec<String>,
}

#[derive(Serialize)]
struct CheckDoc<'a> {
    name: &'a str,
    passed: bool,
    value: String,
    relation: Relation,
    threshold: String,
}

#[derive(Serialize)]
struct TimingDoc<'a> {
    suite: &'a str,
    seconds: f64,
}

impl<'a> From<&'a Check> for CheckDoc<'a> {
    fn from(c: &'a Check) -> Self {
        Self {
            name: &c.name,
            passed: c.passed,
            value: exact(c.value),
            relation: c.relation,
            threshold: exact(c.threshold),
        }
    }
}

impl<'a> From<&'a SuiteRecord> for SuiteDoc<'a> {
    fn from(s: &'a SuiteRecord) -> Self {
        let values = s
            .outcome
            .values
            .iter()
            .map(|(k, v)| {
                let json = match v {
                    Value::Number(x) => serde_json::Value::String(exact(*x)),
                    Value::Flag(b) => serde_json::Value::Bool(*b),
                    Value::Text(t) => serde_json::Value::String(t.clone()),
                };
                (k.clone(), json)
            })
            .collect();
        Self {
            name: &s.name,
            anchor: &s.anchor,
            status: s.status(),
            reason: s.error.as_deref().or(s.outcome.skipped.as_deref()),
            checks: s.outcome.checks.iter().map(CheckDoc::from).collect(),
            values,
            curves: s.outcome.curves.iter().map(|c| s.csv_name(c)).collect(),
        }
    }
}
