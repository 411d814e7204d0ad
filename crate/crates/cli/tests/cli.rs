use std::process::{Command, Output};

fn modeinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modeinv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn units_converts_and_rejects() {
    let ok = modeinv(&["units", "1000"]);
    assert!(ok.status.success());
    let v: f64 = stdout(&ok).trim().parse().unwrap();
    assert!((v - 1000.0 / 2.99792458e8).abs() <= 1e-20);
    assert_eq!(modeinv(&["units", "299792458"]).status.code(), Some(2));
    assert_eq!(modeinv(&["units", "-5"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_svg_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("alpha.toml");
    std::fs::write(
        &spec,
        "observable = \"phase\"\nparameter = \"alpha\"\nmin = 0.0\nmax = 4.0\npoints = 9\nlambda = 1e-2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = modeinv(&["sweep", spec.to_str().unwrap(), "--set", "points=5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("alpha.csv")).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1 + 5);
    assert!(data[0].starts_with("alpha,gamma"));
    assert!(out.join("alpha.svg").exists());
}

#[test]
fn sweep_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    std::fs::write(&spec, "parameter = \"alpha\"\npoints = 1\n").unwrap();
    assert_eq!(modeinv(&["sweep", spec.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(modeinv(&["sweep", "/nonexistent/spec.toml"]).status.code(), Some(2));
    assert_eq!(modeinv(&["recipe", "fig99"]).status.code(), Some(2));
    assert_eq!(modeinv(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_computation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("strong.toml");
    std::fs::write(
        &spec,
        "observable = \"visibility\"\nparameter = \"lambda\"\nmin = 1e-4\nmax = 1e6\npoints = 5\nscale = \"log\"\n",
    )
    .unwrap();
    let o = modeinv(&["sweep", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--no-svg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid point"));
}

#[test]
fn recipe_runs_with_thread_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_modeinv"))
        .args(["recipe", "fig9", "--out", dir.path().to_str().unwrap()])
        .env("MODEINV_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("slope = "));
    let csv = std::fs::read_to_string(dir.path().join("fig9.csv")).unwrap();
    assert!(csv.contains("#! slope = "));
    assert!(csv.contains("# title = "));
    let bad =
        Command::new(env!("CARGO_BIN_EXE_modeinv")).args(["units", "1"]).env("MODEINV_THREADS", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn validate_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = modeinv(&["validate", "reductions", "--json", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["preset"], "reductions");
    assert_eq!(report["passed"], true);
    assert!(!report["checks"].as_array().unwrap().is_empty());
    assert_eq!(modeinv(&["validate", "nope"]).status.code(), Some(2));
}
