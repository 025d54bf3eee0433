use std::fs;
use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_airy-spline"))
}

fn report_value(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing"))
        .parse()
        .unwrap()
}

#[test]
fn solve_beam_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["solve", "--case", "beam-uniform-load", "--samples", "3,3", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&stdout, "total_dofs"), 18.0);
    let csv = fs::read_to_string(dir.path().join("stress.csv")).unwrap();
    assert!(csv.starts_with("patch,xi,eta,x,y,sigma_xx,sigma_yy,sigma_xy\n"));
    assert_eq!(csv.lines().count(), 10);
    assert_eq!(fs::read_to_string(dir.path().join("report.txt")).unwrap(), stdout);
    assert!(dir.path().join("profiles.csv").exists());
}

#[test]
fn larger_aspect_gives_smaller_errors() {
    let run = |aspect: &str| {
        let out = cli()
            .args(["solve", "--case", "beam-uniform-load", "--aspect", aspect])
            .output()
            .unwrap();
        assert!(out.status.success());
        let s = String::from_utf8(out.stdout).unwrap();
        ["sigma_xx", "sigma_yy", "sigma_xy"].map(|c| report_value(&s, &format!("l2_error.{c}")))
    };
    let (a, b) = (run("12"), run("24"));
    assert!((0..3).all(|c| b[c] < a[c]));
}

#[test]
fn missing_config_exits_one() {
    let out = cli().args(["solve", "--config", "missing.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("missing.cfg"));
}

#[test]
fn bad_flags_exit_two() {
    for args in [
        vec!["solve"],
        vec!["solve", "--case", "beam-uniform-load", "--net", "3"],
        vec!["solve", "--case", "beam-uniform-load", "--bc-mode", "sideways"],
        vec!["frobnicate"],
    ] {
        assert_eq!(cli().args(&args).output().unwrap().status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn all_cases_get_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["solve", "--all", "--samples", "2,2", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in ["bar-self-weight", "beam-uniform-load", "bilayer-cantilever", "parabolic-cantilever"] {
        assert!(dir.path().join(name).join("stress.csv").exists(), "{name}");
    }
}

#[test]
fn config_with_overrides() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/beam.toml");
    let out = cli()
        .args(["solve", "--config", cfg, "--net", "4,7", "--bc-mode", "combined", "--bc-weight", "1e8"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&s, "total_dofs"), 28.0);
    assert!(s.contains("solver.mode=combined"));
}
