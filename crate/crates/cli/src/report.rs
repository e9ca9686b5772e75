//! Consolidation of per-suite summaries into criterion and theorem tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{criterion_status, suite_criteria, Check, CliError, Summary, CRITERIA, SCHEMA_VERSION, SUITES};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteRow {
    pub suite: String,
    /// PASS, FAIL or SKIPPED
    pub status: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionRow {
    pub criterion: u8,
    pub name: String,
    pub status: String,
    pub passed_checks: usize,
    pub total_checks: usize,
    pub failing: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremRow {
    pub theorem: String,
    pub shape: String,
    pub constant: Option<f64>,
    pub exponent: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub suites: Vec<SuiteRow>,
    pub criteria: Vec<CriterionRow>,
    pub theorems: Vec<TheoremRow>,
}

fn status(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.into()
}

fn load(dir: &Path) -> Result<Vec<Summary>, CliError> {
    let mut found = Vec::new();
    for s in SUITES {
        let path = dir.join(s).join("summary.json");
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            found.push(serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?);
        }
    }
    Ok(found)
}

pub fn build(summaries: &[Summary]) -> Report {
    let present: Vec<&str> = summaries.iter().map(|s| s.suite.as_str()).collect();
    let suites = SUITES
        .iter()
        .map(|s| SuiteRow {
            suite: s.to_string(),
            status: summaries.iter().find(|x| x.suite == *s).map_or("SKIPPED".into(), |x| status(x.passed)),
        })
        .collect();
    let checks: Vec<Check> = summaries.iter().flat_map(|s| s.checks.clone()).collect();
    let criteria = CRITERIA
        .iter()
        .map(|&(id, name)| {
            let owner_ran = SUITES.iter().any(|s| suite_criteria(s).contains(&id) && present.contains(s));
            match criterion_status(&checks, id).filter(|_| owner_ran) {
                Some((ok, n_ok, n)) => CriterionRow {
                    criterion: id,
                    name: name.into(),
                    status: status(ok),
                    passed_checks: n_ok,
                    total_checks: n,
                    failing: checks.iter().filter(|c| c.criterion == id && !c.passed).map(|c| c.name.clone()).collect(),
                },
                None => CriterionRow { criterion: id, name: name.into(), status: "SKIPPED".into(), passed_checks: 0, total_checks: 0, failing: vec![] },
            }
        })
        .collect();
    let metric = |key: &str| summaries.iter().find_map(|s| s.metrics.get(key).cloned()).flatten();
    let mut theorems = Vec::new();
    if present.contains(&"estimates") {
        let mut shapes: Vec<String> = checks
            .iter()
            .filter(|c| c.name.starts_with("thm11_ratio["))
            .map(|c| c.name.trim_start_matches("thm11_ratio[").trim_end_matches(']').to_string())
            .collect();
        shapes.dedup();
        for sh in shapes {
            for (thm, prefix) in [("1.1", "thm11"), ("1.2", "thm12"), ("1.3", "thm13")] {
                let mine: Vec<&Check> = checks.iter().filter(|c| c.name.starts_with(prefix) && c.name.contains(&sh)).collect();
                theorems.push(TheoremRow {
                    theorem: thm.into(),
                    shape: sh.clone(),
                    constant: metric(&format!("{prefix}_constant[{sh}]")),
                    exponent: (prefix == "thm11").then(|| metric(&format!("thm11_exponent[{sh}]"))).flatten(),
                    status: status(mine.iter().all(|c| c.passed)),
                });
            }
        }
    }
    Report { schema_version: SCHEMA_VERSION, suites, criteria, theorems }
}

pub fn render(r: &Report) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
    let mut s = String::from("criterion  status   checks  name\n");
    for c in &r.criteria {
        s.push_str(&format!("{:>9}  {:<7}  {:>3}/{:<3} {}\n", c.criterion, c.status, c.passed_checks, c.total_checks, c.name));
        for f in &c.failing {
            s.push_str(&format!("{:>20} failed: {f}\n", ""));
        }
    }
    s.push_str("\ntheorem  shape       constant    exponent    status\n");
    for t in &r.theorems {
        s.push_str(&format!("{:<8} {:<11} {:<11} {:<11} {}\n", t.theorem, t.shape, opt(t.constant), opt(t.exponent), t.status));
    }
    s.push_str("\nsuite      status\n");
    for x in &r.suites {
        s.push_str(&format!("{:<10} {}\n", x.suite, x.status));
    }
    s
}

/// Reads `dir/<suite>/summary.json`, writes report.json and report.txt.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let summaries = load(dir)?;
    if summaries.is_empty() {
        return Err(CliError::Io(format!("no suite summaries under {}", dir.display())));
    }
    let r = build(&summaries);
    let json = serde_json::to_string_pretty(&r).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    let text = render(&r);
    std::fs::write(dir.join("report.txt"), &text)?;
    Ok(text)
}
