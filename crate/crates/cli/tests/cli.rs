//! End-to-end tests of the `penalise` binary: reproducibility, file formats,
//! exit codes, and error surfaces. Everything runs at tiny scale.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_penalise"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).arg("--out").arg(dir).output().expect("binary runs");
    if !out.status.success() && out.status.code() != Some(2) {
        let code = out.status.code();
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(
            args.contains(&"--expect-failure"),
            "unexpected failure (code {code:?}): {stderr}"
        );
    }
    out
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn simulate_is_reproducible_and_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let dir1 = tmp.path().join("a");
    let dir2 = tmp.path().join("b");
    let args = ["simulate", "--n-paths", "3", "--seed", "9", "--dt", "0.015625", "--horizon", "8"];
    run(&args, &dir1);
    run(&args, &dir2);
    let a = read(&dir1, "samples.csv");
    assert_eq!(a, read(&dir2, "samples.csv"), "same config must give identical rows");
    assert_eq!(a.lines().count(), 4, "header plus three rows");
    // The detected last zero of the assembled path is the drawn u itself.
    for line in a.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[1], cols[3], "g_check must reproduce u exactly");
        assert!(cols[2] == "1" || cols[2] == "-1");
    }
    // Config echo pins the resolved inputs.
    let echo = read(&dir1, "config.json");
    assert!(echo.contains("\"seed\": 9"));
    assert!(echo.contains("\"subcommand\": \"simulate\""));
}

#[test]
fn simulate_marginals_at_small_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    run(
        &["simulate", "--n-paths", "4000", "--seed", "3", "--dt", "0.0625", "--horizon", "8"],
        &dir,
    );
    let text = read(&dir, "samples.csv");
    let mut mean_u = 0.0f64;
    let mut mean_sign = 0.0f64;
    let mut n = 0.0f64;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        mean_u += cols[1].parse::<f64>().unwrap();
        mean_sign += cols[2].parse::<f64>().unwrap();
        n += 1.0;
    }
    mean_u /= n;
    mean_sign /= n;
    // E[u] = 1/2 (se ~ 0.011), E[sign] = 0 (se ~ 0.016).
    assert!((mean_u - 0.5).abs() < 0.05, "mean u {mean_u}");
    assert!(mean_sign.abs() < 0.07, "mean sign {mean_sign}");
}

#[test]
fn simulate_dumps_paths_when_asked() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("dump");
    run(
        &["simulate", "--n-paths", "2", "--dump-paths", "2", "--dt", "0.25", "--horizon", "4"],
        &dir,
    );
    let p0 = read(&dir, "paths/path_00000.csv");
    assert!(p0.starts_with("time,value\n"));
    assert!(p0.lines().count() >= 18, "17 nodes plus the inserted u node");
    let first_row = p0.lines().nth(1).unwrap();
    assert!(first_row.starts_with("0,0"), "paths start at the origin: {first_row}");
}

#[test]
fn integrate_residuals_vanish_and_trajectory_settles() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("int");
    let f_path = tmp.path().join("f.json");
    fs::write(&f_path, "[[1.0, 1.0]]").unwrap();
    let out = bin()
        .args(["integrate", "--n-paths", "50", "--dt", "0.0625", "--horizon", "8"])
        .arg("--integrand")
        .arg(&f_path)
        .args(["--t-grid", "0,0.5,1,2,8"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let integrals = read(&dir, "integrals.csv");
    let mut whole_by_path = Vec::new();
    for line in integrals.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        let (whole, residual) = (cols[0], cols[3]);
        assert!(residual.abs() <= 1e-12 * (1.0 + whole.abs()), "residual {residual}");
        whole_by_path.push(whole);
    }
    let traj = read(&dir, "trajectory.csv");
    // At t = 0 the integral is 0; past the support it equals the whole.
    for line in traj.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let path: usize = cols[0].parse().unwrap();
        let t: f64 = cols[1].parse().unwrap();
        let v: f64 = cols[2].parse().unwrap();
        if t == 0.0 {
            assert_eq!(v, 0.0);
        }
        if t == 8.0 {
            let whole = whole_by_path[path];
            assert!((v - whole).abs() <= 1e-12 * (1.0 + whole.abs()));
        }
    }
}

#[test]
fn integrate_empty_integrand_gives_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("zero");
    let f_path = tmp.path().join("zero.json");
    fs::write(&f_path, "[]").unwrap();
    let out = bin()
        .args(["integrate", "--n-paths", "5", "--dt", "0.25", "--horizon", "4"])
        .arg("--integrand")
        .arg(&f_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    for line in read(&dir, "integrals.csv").lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(&cols[1..], &["0", "0", "0", "0"]);
    }
}

#[test]
fn integrate_rejects_malformed_json_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("bad");
    let f_path = tmp.path().join("bad.json");
    fs::write(&f_path, "[[1.0, ]]").unwrap();
    let out = bin()
        .args(["integrate"])
        .arg("--integrand")
        .arg(&f_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("column"), "parse errors carry a position: {stderr}");
}

#[test]
fn integrate_without_integrand_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("noint");
    let out = bin().args(["integrate"]).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_subset_reports_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir1 = tmp.path().join("v1");
    let dir2 = tmp.path().join("v2");
    let args = [
        "verify",
        "--check",
        "decomposition",
        "--check",
        "limit_ratio",
        "--n-paths",
        "300",
        "--seed",
        "7",
        "--dt",
        "0.03125",
        "--horizon",
        "8",
    ];
    let out1 = run(&args, &dir1);
    assert_eq!(out1.status.code(), Some(0), "{}", String::from_utf8_lossy(&out1.stderr));
    run(&args, &dir2);
    assert_eq!(read(&dir1, "report.json"), read(&dir2, "report.json"));
    assert_eq!(read(&dir1, "report.csv"), read(&dir2, "report.csv"));
    let report = read(&dir1, "report.json");
    assert!(report.contains("\"check_id\": \"decomposition\""));
    assert!(report.contains("\"check_id\": \"limit_ratio\""));
    assert!(!report.contains("\"check_id\": \"bm_isometry\""), "subset means subset");
}

#[test]
fn verify_broken_tolerance_fails_the_gate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("broken");
    let out = bin()
        .args([
            "verify",
            "--check",
            "decomposition",
            "--n-paths",
            "100",
            "--dt",
            "0.0625",
            "--horizon",
            "8",
            "--tolerance-scale",
            "0",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "zeroed tolerances must fail the gate");
    assert!(read(&dir, "report.json").contains("\"verdict\": \"fail\""));
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("env");
    let out = bin()
        .args(["simulate", "--n-paths", "1", "--dt", "0.25", "--horizon", "4"])
        .arg("--out")
        .arg(&dir)
        .env("PENALISE_SEED", "12345")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(read(&dir, "config.json").contains("\"seed\": 12345"));
}

#[test]
fn config_file_with_unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cfg");
    let cfg_path = tmp.path().join("run.json");
    fs::write(&cfg_path, r#"{"n_paths": 5, "unknown_key": true}"#).unwrap();
    let out = bin()
        .args(["simulate"])
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));
}

#[test]
fn table_emits_rows_and_rejects_unknown_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("table");
    let out = bin()
        .args(["table", "--check", "limit_ratio", "--levels", "25,100,400"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = read(&dir, "table.csv");
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("level,estimate,stderr,bias_proxy\n"));

    let out = bin()
        .args(["table", "--check", "nonsense"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
