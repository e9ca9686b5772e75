//! Writing suite outputs and comparing tables against golden copies.

use std::fs;
use std::path::Path;

use crate::{CliError, SuiteOutput, Summary};

pub fn write_table(path: &Path, t: &crate::Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_record(&t.header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in &t.rows {
        w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_text(out: &SuiteOutput) -> String {
    let mut s = format!("suite {}: {}\n", out.suite, if out.passed() { "PASS" } else { "FAIL" });
    for c in &out.checks {
        let v = c.value.map_or("non-finite".to_string(), |v| format!("{v:.6e}"));
        s.push_str(&format!("  [{}] c{} {} = {} ({})\n", if c.passed { "ok" } else { "FAIL" }, c.criterion, c.name, v, c.threshold));
    }
    for (k, v) in &out.metrics {
        s.push_str(&format!("  metric {k} = {v:.6e}\n"));
    }
    s
}

/// Writes tables, summary.json and summary.txt under `dir/<suite>/`.
pub fn write_suite(dir: &Path, out: &SuiteOutput, seed: u64) -> Result<(), CliError> {
    let sub = dir.join(&out.suite);
    fs::create_dir_all(&sub)?;
    for t in &out.tables {
        write_table(&sub.join(format!("{}.csv", t.name)), t)?;
    }
    let json = serde_json::to_string_pretty(&Summary::of(out, seed)).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(sub.join("summary.json"), json + "\n")?;
    fs::write(sub.join("summary.txt"), summary_text(out))?;
    Ok(())
}

fn cells_match(a: &str, b: &str, rtol: f64) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= rtol * x.abs().max(y.abs()) || (x.is_nan() && y.is_nan()),
        _ => false,
    }
}

/// Compares every table of the suite with `golden/<suite>/<table>.csv` when
/// that file exists; returns the names of mismatched tables.
pub fn compare_golden(golden: &Path, out: &SuiteOutput, rtol: f64) -> Result<Vec<String>, CliError> {
    let mut bad = Vec::new();
    for t in &out.tables {
        let path = golden.join(&out.suite).join(format!("{}.csv", t.name));
        if !path.exists() {
            continue;
        }
        let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = r.headers().map_err(|e| CliError::Io(e.to_string()))?.iter().map(String::from).collect();
        let rows: Vec<Vec<String>> = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Io(e.to_string()))?;
        let same = header == t.header
            && rows.len() == t.rows.len()
            && rows.iter().zip(&t.rows).all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cells_match(x, y, rtol)));
        if !same {
            bad.push(format!("{}/{}", out.suite, t.name));
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_cells_compare_with_tolerance() {
        assert!(cells_match("1.0000000000e0", "1.0000000001e0", 1e-9));
        assert!(!cells_match("1.0e0", "1.1e0", 1e-9));
        assert!(!cells_match("bump", "cube", 1e-9));
    }
}
