use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ssqw(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ssqw"));
    cmd.args(args).env_remove("SSQW_OUT_DIR");
    cmd
}

fn run(cmd: &str, config: &Path, out: &Path) -> Output {
    ssqw(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
}

fn ok(output: &Output) {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_one_defect_demo() {
    let out = tempfile::tempdir().unwrap();
    let o = run("simulate", &configs().join("one_defect.toml"), out.path());
    ok(&o);
    let dist = fs::read_to_string(out.path().join("distribution.csv")).unwrap();
    let mut lines = dist.lines();
    assert_eq!(lines.next(), Some("t,x,prob"));
    // t = 0 echoes the initial state
    assert_eq!(lines.next(), Some("0,0,1.0000000000000000e0"));
    let summary = json(&out.path().join("simulate_summary.json"));
    assert_eq!(summary.as_array().unwrap().len(), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("distribution.csv"));
}

#[test]
fn spectrum_grid_of_eight() {
    let out = tempfile::tempdir().unwrap();
    ok(&run("spectrum", &configs().join("degenerate.toml"), out.path()));
    let rows = csv_rows(&out.path().join("dispersion.csv"));
    assert_eq!(rows.len(), 8);
    for r in rows {
        assert_eq!(r[14], -r[15]);
        assert!(((r[2] * r[2] + r[3] * r[3]).sqrt() - 1.0).abs() < 1e-14);
        assert!(((r[4] * r[4] + r[5] * r[5]).sqrt() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn density_of_homogeneous_walk() {
    let out = tempfile::tempdir().unwrap();
    ok(&run("density", &configs().join("homogeneous.toml"), out.path()));
    let s = json(&out.path().join("density_summary.json"));
    assert_eq!(s["w0"].as_f64(), Some(0.0));
    assert!((s["mass"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(out.path().join("weights.csv").exists());
    assert_eq!(json(&out.path().join("scattering.json"))["converged"], Value::Bool(true));
}

#[test]
fn degenerate_density_has_no_plus_branch() {
    let out = tempfile::tempdir().unwrap();
    ok(&run("density", &configs().join("degenerate.toml"), out.path()));
    let rows = csv_rows(&out.path().join("density.csv"));
    assert!(rows.iter().all(|r| r[1].abs() <= 1e-12));
}

#[test]
fn two_phase_writes_one_weight_file_per_side() {
    let out = tempfile::tempdir().unwrap();
    ok(&run("density", &configs().join("two_phase.toml"), out.path()));
    assert!(out.path().join("weights_left.csv").exists());
    assert!(out.path().join("weights_right.csv").exists());
    assert!(!out.path().join("weights.csv").exists());
}

#[test]
fn compare_bound_state_reports_atom() {
    let out = tempfile::tempdir().unwrap();
    ok(&run("compare", &configs().join("bound_state.toml"), out.path()));
    let s = json(&out.path().join("convergence_summary.json"));
    assert!(s["w0"].as_f64().unwrap() > 0.0);
    assert_eq!(csv_rows(&out.path().join("convergence.csv")).len(), 4);
}

#[test]
fn compare_rejects_empty_time_list() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(configs().join("homogeneous.toml"))
        .unwrap()
        .replace("times = [500, 1000, 2000, 4000]", "times = []");
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, src).unwrap();
    let o = run("compare", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least one time"));
}

#[test]
fn malformed_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[shift]\np = 0.6\nq = 0.7\n\n[coins]\nmodel = \"homogeneous\"\ncoin = \"hadamard\"\n\n[initial]\nsites = [{ x = 0, up = 1.0, down = 0.0 }]\n").unwrap();
    let o = run("simulate", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2:"), "{}", String::from_utf8_lossy(&o.stderr));

    fs::write(&cfg, "[shift]\np = 0.6\nq = \n").unwrap();
    let o = run("simulate", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3:"));

    let o = run("simulate", &dir.path().join("missing.toml"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_convergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(configs().join("one_defect.toml")).unwrap() + "require_convergence = true\n";
    let cfg = dir.path().join("strict.toml");
    fs::write(&cfg, src).unwrap();
    let o = run("density", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn identical_runs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("custom.toml");
    for cmd in ["simulate", "spectrum", "density"] {
        ok(&run(cmd, &cfg, a.path()));
        ok(&ssqw(&[cmd, "--config", cfg.to_str().unwrap(), "--out", b.path().to_str().unwrap(), "--threads", "1"])
            .output()
            .unwrap());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn output_directory_precedence() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hadamard.toml");
    let o = ssqw(&["spectrum", "--config", cfg.to_str().unwrap()])
        .env("SSQW_OUT_DIR", env_dir.path())
        .output()
        .unwrap();
    ok(&o);
    assert!(env_dir.path().join("dispersion.csv").exists());

    let o = ssqw(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", flag_dir.path().to_str().unwrap()])
        .env("SSQW_OUT_DIR", env_dir.path().join("unused"))
        .output()
        .unwrap();
    ok(&o);
    assert!(flag_dir.path().join("dispersion.csv").exists());
    assert!(!env_dir.path().join("unused").exists());
}

#[test]
fn builtin_scenarios_by_name() {
    let out = tempfile::tempdir().unwrap();
    let o = ssqw(&["spectrum", "--config", "builtin:hadamard", "--out", out.path().to_str().unwrap()])
        .output()
        .unwrap();
    ok(&o);
    let o = ssqw(&["spectrum", "--config", "builtin:nope", "--out", out.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
