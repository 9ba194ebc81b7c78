use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lambda_pbg::config::parse_config;
use lambda_pbg::scenario::config_header;

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn reference_nojump_ends_near_twenty_percent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "reference.cfg",
        "gamma = 1\nV_ab = 1\nC_pow23 = 1/3\nomega_e_minus_omega_b = 0\ndetuning = 0\n",
    );
    let out = simulate(&["nojump", "--config", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "t,pi0_a,pi0_b,pi0_c,P"));
    let last = data_rows(&text).pop().unwrap();
    assert!((last[4] - 0.2).abs() < 0.05, "P(T) = {}", last[4]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "gamma = -1\n");
    let out = simulate(&["nojump", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma") && err.contains("line 1"), "{err}");

    let unknown = write_config(dir.path(), "unknown.cfg", "gamma = 1\nlaser = 2\n");
    let out = simulate(&["nojump", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("laser"));
}

#[test]
fn accuracy_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coarse.cfg",
        "grid_points = 16\nwindow_halfwidth = 5\nasymptote_subtraction = false\nhorizon = 5\n",
    );
    let out = simulate(&["nojump", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn montecarlo_output_is_byte_identical_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.cfg",
        "n_traj = 500\nhorizon = 20\ngrid_points = 32768\nseed = 11\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (path, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let out = simulate(&[
            "montecarlo",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (a, b, c) = (
        fs::read(a).unwrap(),
        fs::read(b).unwrap(),
        fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn emitted_header_reparses_to_the_run_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scan.cfg",
        "[scan]\nscan_points = 7\nscan_V = 0.5, 3\nC_pow23 = 1\nseed = 5\n",
    );
    let out = simulate(&["scan", "--config", &cfg, "--format", "jsonl"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let reparsed = parse_config(&config_header(&text)).unwrap();
    let mut expected = parse_config(&fs::read_to_string(&cfg).unwrap()).unwrap();
    expected.scenario = lambda_pbg::config::Scenario::Scan;
    expected.format = lambda_pbg::config::Format::Jsonl;
    assert_eq!(reparsed, expected);
    assert_eq!(text.lines().filter(|l| l.starts_with('{')).count(), 14);
}

#[test]
fn branching_table_matches_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "branch.cfg",
        "branching_gamma_prime = 0, 1\nbranching_V = 0.5, 3\ngrid_points = 32768\n",
    );
    let out = simulate(&["branching", "--config", &cfg]);
    assert!(out.status.success());
    let rows = data_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!(r[4] < 1e-3, "{r:?}");
    }
}
