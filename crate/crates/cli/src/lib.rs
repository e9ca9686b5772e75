//! Batch experiment runner: suites, report emission and golden-table checks.

pub mod config;
pub mod output;
pub mod report;
pub mod suites;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use config::Config;

/// Version of the JSON summary and report layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const SUITES: [&str; 9] = ["geometry", "kernels", "harmonics", "dyadic", "operators", "sparse", "weights", "orlicz", "estimates"];

/// Acceptance criteria covered by each suite.
pub fn suite_criteria(suite: &str) -> &'static [u8] {
    match suite {
        "geometry" => &[1],
        "kernels" => &[2],
        "harmonics" => &[3],
        "dyadic" => &[4],
        "operators" => &[5],
        "sparse" => &[6],
        "weights" => &[7],
        "orlicz" => &[9],
        "estimates" => &[8, 10],
        _ => &[],
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "geometry"),
    (2, "kernels"),
    (3, "harmonics"),
    (4, "dyadic"),
    (5, "operators"),
    (6, "sparse"),
    (7, "weights"),
    (8, "representation"),
    (9, "function spaces"),
    (10, "end-to-end estimates"),
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("invariant violated: {0}")]
    Lab(#[from] kfp_core::LabError),
    #[error("golden table mismatch: {0}")]
    Golden(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Lab(_) | CliError::Golden(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// One named assertion with its measured value and threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    /// null when not finite
    pub value: Option<f64>,
    pub threshold: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }
}

/// Fixed-precision float formatting used in every table.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub suite: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub metrics: BTreeMap<String, f64>,
}

impl SuiteOutput {
    pub fn new(suite: &str) -> Self {
        SuiteOutput { suite: suite.into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, criterion: u8, name: String, value: f64, threshold: String, passed: bool) {
        self.checks.push(Check { criterion, name, value: value.is_finite().then_some(value), threshold, passed });
    }

    /// value <= bound
    pub fn le(&mut self, criterion: u8, name: impl Into<String>, value: f64, bound: f64) {
        self.push(criterion, name.into(), value, format!("<= {bound:e}"), value <= bound);
    }

    /// value >= bound
    pub fn ge(&mut self, criterion: u8, name: impl Into<String>, value: f64, bound: f64) {
        self.push(criterion, name.into(), value, format!(">= {bound:e}"), value >= bound);
    }

    /// lo <= value <= hi
    pub fn within(&mut self, criterion: u8, name: impl Into<String>, value: f64, lo: f64, hi: f64) {
        self.push(criterion, name.into(), value, format!("in [{lo}, {hi}]"), value >= lo && value <= hi);
    }

    pub fn finite(&mut self, criterion: u8, name: impl Into<String>, value: f64) {
        self.push(criterion, name.into(), value, "finite".into(), value.is_finite());
    }

    pub fn flag(&mut self, criterion: u8, name: impl Into<String>, ok: bool) {
        self.push(criterion, name.into(), if ok { 1.0 } else { 0.0 }, "true".into(), ok);
    }

    pub fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }
}

/// The machine-readable per-suite summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// non-finite metrics are stored as null
    pub metrics: BTreeMap<String, Option<f64>>,
    pub tables: Vec<String>,
}

impl Summary {
    pub fn of(out: &SuiteOutput, seed: u64) -> Self {
        Summary {
            schema_version: SCHEMA_VERSION,
            suite: out.suite.clone(),
            seed,
            passed: out.passed(),
            checks: out.checks.clone(),
            metrics: out.metrics.iter().map(|(k, v)| (k.clone(), v.is_finite().then_some(*v))).collect(),
            tables: out.tables.iter().map(|t| t.name.clone()).collect(),
        }
    }
}

/// Status line of one criterion over a set of checks.
pub fn criterion_status(checks: &[Check], criterion: u8) -> Option<(bool, usize, usize)> {
    let mine: Vec<&Check> = checks.iter().filter(|c| c.criterion == criterion).collect();
    if mine.is_empty() {
        return None;
    }
    let ok = mine.iter().filter(|c| c.passed).count();
    Some((ok == mine.len(), ok, mine.len()))
}
