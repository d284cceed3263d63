use std::path::Path;
use std::process::{Command, Output};

use bvp4::config::RunConfig;

const F41: &str = "u^2*(exp(-u)+1)";
const F42: &str = "sqrt(1+u)+sin(u)";

fn bvp4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvp4")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    bvp4(args).status.code().unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn solve_exit_codes() {
    assert_eq!(code(&["solve", "--f", F41, "--a", "t^2"]), 0);
    assert_eq!(code(&["solve", "--f", F42, "--a", "t"]), 0);
    assert_eq!(code(&["solve", "--f", "0*u", "--a", "t"]), 2);
    assert_eq!(code(&["solve", "--f", F41, "--a", "2*t"]), 3);
    assert_eq!(code(&["solve", "--f", "u-1", "--a", "t"]), 3);
    assert_eq!(code(&["solve", "--f", "u+", "--a", "t"]), 1);
    assert_eq!(code(&["solve", "--f", F41]), 1);
    assert_eq!(code(&["solve", "--f", F41, "--a", "t", "--theta", "0.7"]), 1);
    assert_eq!(code(&["solve", "--config", "/nonexistent/run.toml"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&["solve", "--f", F42, "--a", "t", "--out", out, "--seed", "7"]), 0);
    let (header, rows) = read_csv(&dir.path().join("solution.csv"));
    assert_eq!(header, "t,u,Au,fp_residual");
    assert_eq!(rows.len(), 32);
    assert!(rows.iter().all(|r| r.len() == 4 && r[1] > 0.0 && r[3] <= 1e-8));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["converged"], true);
    assert_eq!(json["in_cone"], true);
    assert_eq!(json["seed"], 7);
    assert_eq!(json["bc_residuals"].as_array().unwrap().len(), 4);
}

#[test]
fn output_is_deterministic() {
    let a = bvp4(&["solve", "--f", F41, "--a", "t^2", "--csv"]).stdout;
    let b = bvp4(&["solve", "--f", F41, "--a", "t^2", "--csv"]).stdout;
    assert_eq!(a, b);
    let a = bvp4(&["verify", "--json", "--seed", "3"]).stdout;
    let b = bvp4(&["verify", "--json", "--seed", "3"]).stdout;
    assert_eq!(a, b);
    let card: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(card["seed"], 3);
    assert_eq!(card["passed"], true);
}

#[test]
fn verify_codes() {
    assert_eq!(code(&["verify"]), 0);
    assert_eq!(code(&["verify", "--theta", "0.49"]), 0);
    assert_eq!(code(&["verify", "--tamper-kernel"]), 4);
}

#[test]
fn classify_reports_certificate() {
    for (f, a, class) in [(F41, "t^2", "superlinear"), (F42, "t", "sublinear"), ("u", "t", "indeterminate")] {
        let out = bvp4(&["classify", "--f", f, "--a", a, "--json"]);
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["classification"], class);
    }
    let out = bvp4(&["certificate", "--f", F41, "--a", "t^2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["epsilon_max"], 4.0);
    assert_eq!(v["finf"], "inf");
    assert_eq!(v["f0"], 0.0);
    approx::assert_relative_eq!(v["delta_min"].as_f64().unwrap(), 4.445e5, max_relative = 1e-3);
}

#[test]
fn green_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&["green", "--m", "3", "--out", out]), 0);
    let (header, rows) = read_csv(&dir.path().join("green.csv"));
    assert_eq!(header, "t,s,G,kernel,lower_envelope,upper_envelope");
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let corner = (r[0] == 0.0 || r[0] == 1.0) && (r[1] == 0.0 || r[1] == 1.0);
        if corner {
            assert_eq!(r[2], 0.0);
        }
    }

    assert_eq!(code(&["green", "--m", "101", "--a", "t^2", "--out", out]), 0);
    let (_, rows) = read_csv(&dir.path().join("green.csv"));
    assert_eq!(rows.len(), 101 * 101);
    for r in &rows {
        assert!(r[3] >= r[2]);
        assert!(r[2] - r[5] <= 1e-14);
        assert!(r[4] - 1e-14 <= r[2]);
    }
    assert_eq!(code(&["green", "--m", "1"]), 1);
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let mut cfg = RunConfig::default();
    cfg.problem.f = Some(F42.into());
    cfg.problem.a = Some("t".into());
    cfg.problem.theta = 0.3;
    cfg.problem.finf = Some("0".into());
    cfg.quadrature.panels = 16;
    cfg.solver.starts = vec![0.5, 5.0];
    cfg.solver.omega = 0.6;
    cfg.solver.seed = 11;
    cfg.output.dir = Some(dir.path().join("out"));
    std::fs::write(&path, cfg.to_toml()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);

    assert_eq!(code(&["solve", "--config", path.to_str().unwrap()]), 0);
    assert!(dir.path().join("out/solution.csv").exists());
    assert!(dir.path().join("out/report.json").exists());

    std::fs::write(&path, "[solver]\nomega = 2.0\n").unwrap();
    assert_eq!(code(&["solve", "--config", path.to_str().unwrap(), "--f", "u", "--a", "t"]), 1);
}
