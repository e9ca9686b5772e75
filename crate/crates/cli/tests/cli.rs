use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfp")).args(args).output().expect("spawn kfp")
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, format!("[geometry]\nsamples = 300\nbeta_samples = 200\n{extra}")).unwrap();
    p
}

fn run_geometry(dir: &Path, out: &Path, extra: &str) -> Output {
    let cfg = small_config(dir, extra);
    kfp(&["run", "--suite", "geometry", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn geometry_run_passes_and_writes_reports() {
    let d = scratch("geometry");
    let out = d.join("out");
    let o = run_geometry(&d, &out, "");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary.json", "summary.txt", "group_residuals.csv"] {
        assert!(out.join("geometry").join(f).exists(), "{f} missing");
    }
    let r = kfp(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains("geometry   PASS"));
    assert!(text.contains("estimates  SKIPPED"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["criteria"][1]["status"], "SKIPPED");
}

#[test]
fn same_seed_gives_identical_summaries() {
    let d = scratch("determinism");
    let (a, b) = (d.join("a"), d.join("b"));
    assert_eq!(run_geometry(&d, &a, "").status.code(), Some(0));
    assert_eq!(run_geometry(&d, &b, "").status.code(), Some(0));
    let read = |p: &Path| fs::read(p.join("geometry/summary.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    let csv = |p: &Path| fs::read(p.join("geometry/group_residuals.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
}

#[test]
fn unknown_suite_exits_1_with_usage() {
    let d = scratch("unknown");
    let o = kfp(&["run", "--suite", "nope", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("unknown suite 'nope'"), "{e}");
    assert!(e.contains("Usage"), "{e}");
}

#[test]
fn bad_config_exits_1() {
    let d = scratch("badconfig");
    let o = run_geometry(&d, &d.join("out"), "[bogus]\nx = 1\n");
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let missing = kfp(&["run", "--suite", "geometry", "--config", d.join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn tampered_golden_exits_2_naming_the_table() {
    let d = scratch("golden");
    let first = d.join("first");
    assert_eq!(run_geometry(&d, &first, "").status.code(), Some(0));
    let golden = d.join("golden");
    fs::create_dir_all(golden.join("geometry")).unwrap();
    let table = fs::read_to_string(first.join("geometry/group_residuals.csv")).unwrap();
    fs::write(golden.join("geometry/group_residuals.csv"), &table).unwrap();
    let extra = format!("[run]\ngolden_dir = {:?}\n", golden.to_str().unwrap());
    assert_eq!(run_geometry(&d, &d.join("match"), &extra).status.code(), Some(0));

    let mut lines: Vec<String> = table.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[1].split(',').collect();
    cells[2] = "1.0e0";
    lines[1] = cells.join(",");
    fs::write(golden.join("geometry/group_residuals.csv"), lines.join("\n") + "\n").unwrap();
    let o = run_geometry(&d, &d.join("mismatch"), &extra);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geometry/group_residuals"), "{}", stderr(&o));
}

#[test]
fn failed_assertion_exits_2_naming_the_check() {
    let d = scratch("assertion");
    let o = run_geometry(&d, &d.join("out"), "tol = -1.0\n");
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("assertion failure: geometry/"), "{}", stderr(&o));
}

#[test]
fn report_without_summaries_exits_1() {
    let d = scratch("empty");
    let o = kfp(&["report", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no suite summaries"));
}
