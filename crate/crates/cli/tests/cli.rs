use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smtp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smtp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SMTP_OUT_DIR")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const QUAD: &str = "objective=quadratic\ndim=10\ncoord_L=logspace:1,10\n";

#[test]
fn run_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.cfg", &format!("{QUAD}schedule.kind=solution_free\nschedule.t=1e-4\nmax_iters=300\nseeds=3"));
    let out = smtp(&["run", "--config", &cfg, "--out", "out", "--jobs", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for seed in 0..3 {
        assert!(dir.path().join(format!("out/trace_seed{seed}.csv")).exists());
    }
    assert!(dir.path().join("out/summary.txt").exists());
}

#[test]
fn single_seed_override_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.cfg", &format!("{QUAD}schedule.gamma=0.05\nmax_iters=500"));
    for target in ["a", "b"] {
        let out = smtp(&["run", "--config", &cfg, "--out", target, "--seed", "9"], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/trace_seed9.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trace_seed9.csv")).unwrap();
    assert_eq!(a, b);
    assert!(!dir.path().join("a/trace_seed0.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.cfg", &format!("{QUAD}schedule.gamma=0.05\nmax_iters=10\nseeds=[2]"));
    let out = Command::new(env!("CARGO_BIN_EXE_smtp"))
        .args(["run", "--config", &cfg])
        .current_dir(dir.path())
        .env("SMTP_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_env/trace_seed2.csv").exists());
}

#[test]
fn envelope_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.cfg", &format!("{QUAD}schedule.gamma=1e-6\nmax_iters=2000\ntheorem=SC-DEP\nseeds=2"));
    let out = smtp(&["run", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "objective=quadratic\ncoord_L=1\nbeta=1.0\n");
    let out = smtp(&["validate", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("beta must lie in [0,1)"), "{err}");

    let out = smtp(&["run", "--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = smtp(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = smtp(&["compare", "--configs", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_and_help_exit_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.cfg", &format!("{QUAD}schedule.gamma=0.05"));
    let out = smtp(&["validate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
    assert_eq!(smtp(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(smtp(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn compare_prints_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let common = format!("{QUAD}schedule.kind=solution_free\nschedule.t=1e-4\nepsilon=1e-2\nmax_iters=50000\nseeds=4\n");
    let stp = write(dir.path(), "stp.cfg", &format!("{common}method=stp"));
    let smtp_cfg = write(dir.path(), "smtp.cfg", &format!("{common}method=smtp"));
    let out = smtp(&["compare", "--configs", &stp, &smtp_cfg, "--out", "table.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let file = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(stdout, file);
    let rows: Vec<&str> = file.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("stp,stp,") && rows[2].starts_with("smtp,smtp,"));
}
