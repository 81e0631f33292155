use std::path::Path;
use std::process::{Command, Output};

use ira::cli::{parse_report_csv, JsonReport};

fn ira(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ira")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = ira(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, kind: &str, n: usize, seed: u64) -> String {
    let path = dir.join(format!("{kind}-{n}-{seed}.csv"));
    let path = path.to_str().unwrap().to_owned();
    ok(&[
        "synth",
        "--kind",
        kind,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        &path,
    ]);
    path
}

#[test]
fn missing_file_exits_1_and_names_path() {
    let out = ira(&["ira", "--data", "/no/such/file.csv", "--response", "Y"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.csv"));
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "linear", 50, 1);
    let base = ["--data", data.as_str(), "--response", "Y"];

    let out = ira(&[&["sweep"][..], &base, &["--points-list", "", "--background-list", "10"]].concat());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = ira(&[&["ci-curve"][..], &base, &["--repeat-list", "1,5"]].concat());
    assert_eq!(out.status.code(), Some(2));

    let out = ira(&[&["ira"][..], &base, &["--points", "1"]].concat());
    assert_eq!(out.status.code(), Some(2));

    let out = ira(&["ira", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_reproducible_and_shaped() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = std::fs::read(synth(a.path(), "linear", 1000, 4)).unwrap();
    let second = std::fs::read(synth(b.path(), "linear", 1000, 4)).unwrap();
    assert_eq!(first, second);

    let text = String::from_utf8(first).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1001);
    assert_eq!(lines[0], "X1,X2,X3,X4,X5,X6,X7,X8,Y");
    assert!(lines.iter().all(|l| l.split(',').count() == 9));
}

#[test]
fn ols_ranks_x7_first() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "linear", 1000, 11);
    let out = ok(&["ira", "--data", &data, "--response", "Y", "--format", "json"]);
    let report: JsonReport = serde_json::from_str(&out).unwrap();
    assert_eq!(report.predictors[0].name, "X7");
    assert!(report.config.model.starts_with("linear"), "{}", report.config.model);
}

#[test]
fn ols_ci_curve_is_flat_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "linear", 300, 2);
    let out = ok(&[
        "ci-curve",
        "--data",
        &data,
        "--response",
        "Y",
        "--repeat-list",
        "5,10",
        "--background",
        "20",
        "--format",
        "csv",
    ]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("repeats,avg_ci_width"));
    for line in lines {
        let width: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(width.abs() < 1e-9, "{line}");
    }
}

#[test]
fn csv_and_json_reports_agree() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "nonlinear", 200, 3);
    let args = [
        "ira",
        "--data",
        &data,
        "--response",
        "Y",
        "--model",
        "rf",
        "--trees",
        "10",
        "--repeats",
        "5",
        "--background",
        "30",
        "--points",
        "20",
    ];
    let csv = ok(&[&args[..], &["--format", "csv"]].concat());
    let json = ok(&[&args[..], &["--format", "json"]].concat());
    let from_csv = parse_report_csv(&csv).unwrap();
    let from_json: JsonReport = serde_json::from_str(&json).unwrap();
    assert_eq!(from_csv.predictors, from_json.predictors);
    assert!(from_csv
        .predictors
        .iter()
        .all(|p| p.repeated.as_ref().unwrap().samples.len() == 5));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "linear", 100, 5);
    let out_path = dir.path().join("report.json");
    let args = ["ira", "--data", &data, "--response", "Y", "--format", "json"];
    let stdout = ok(&args);
    ok(&[&args[..], &["--out", out_path.to_str().unwrap()]].concat());
    assert_eq!(std::fs::read_to_string(out_path).unwrap(), stdout);
}

#[test]
fn sweep_emits_long_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "linear", 100, 6);
    let out = ok(&[
        "sweep",
        "--data",
        &data,
        "--response",
        "Y",
        "--points-list",
        "5,10",
        "--background-list",
        "3,4,5",
        "--format",
        "csv",
    ]);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "K,M,predictor,ira");
    assert_eq!(rows.len(), 1 + 2 * 3 * 8);
}

#[test]
fn feed_mill_perturbation_table() {
    let out = ok(&["perturb", "--model", "feedmill", "--format", "csv"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 10);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 10);
    let zero = header.iter().position(|h| *h == "0").unwrap();
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 10);
        assert_eq!(cells[zero].parse::<f64>().unwrap(), 0.0);
    }
    let ambient = lines.iter().find(|l| l.starts_with("Ambient Humidity")).unwrap();
    let cells: Vec<f64> = ambient.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert!(cells[..4].iter().all(|&v| v > 0.0));
}

#[test]
fn feed_mill_repeated_keeps_leaders() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "feedmill-bg", 1000, 7);
    let out = ok(&[
        "ira",
        "--data",
        &data,
        "--model",
        "feedmill",
        "--repeats",
        "50",
        "--format",
        "json",
    ]);
    let report: JsonReport = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = report.predictors.iter().map(|p| p.name.as_str()).collect();
    assert!(names[..2].contains(&"Fat Content (%)"), "{names:?}");
    assert!(names[..2].contains(&"ADF Content (%)"), "{names:?}");
    assert_eq!(names[8], "Cumulative Production (Tonnes)");
    for p in &report.predictors {
        let s = p.repeated.as_ref().unwrap();
        assert!(s.ci_lower <= s.mean && s.mean <= s.ci_upper);
    }
}

#[test]
fn quantile_range_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "linear", 200, 9);
    let base = ["ira", "--data", &data, "--response", "Y", "--format", "json"];
    let full: JsonReport = serde_json::from_str(&ok(&base)).unwrap();
    let out = ok(&[&base[..], &["--grid", "unique", "--quantile-range", "0.25,0.75"]].concat());
    let inner: JsonReport = serde_json::from_str(&out).unwrap();
    let x7 = |r: &JsonReport| r.predictors.iter().find(|p| p.name == "X7").unwrap().ira;
    assert!(x7(&inner) < x7(&full));

    for bad in ["0.25", "0.25,0.5,0.75", "0.8,0.2"] {
        let out = ira(&[&base[..], &["--quantile-range", bad]].concat());
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
}
