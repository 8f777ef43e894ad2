use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[scenario]
bs_antennas = 4
irs_elements = 8
irs_count = 2
d_r_start_m = 1.0
d_r_stop_m = 10.0
d_r_points = 4
gain_mode = "random"
trials = 20
seed = 3

[sweep]
solvers = ["closed_form", "greedy_q2"]
"#;

const HEADER: &str = "variable,value,solver,mean_snr_db,stderr_db,trials";

fn mirs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirs"))
        .args(args)
        .env_remove("MIRS_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn sweep_writes_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = mirs(&["sweep", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 1 + 4 * 2);
    assert!(lines[1].starts_with("d_r,1.0,closed_form,"));
    assert!(lines[2].starts_with("d_r,1.0,greedy_q2,"));
    assert!(lines[1].ends_with(",20"));
}

#[test]
fn sweep_to_file_matches_stdout() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let target = dir.path().join("out.csv");
    let out = mirs(&["sweep", path_str(&cfg), "--out", path_str(&target)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let again = mirs(&["sweep", path_str(&cfg)]);
    assert_eq!(std::fs::read(&target).unwrap(), again.stdout);
}

#[test]
fn json_output_has_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = mirs(&["sweep", path_str(&cfg), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0]["solver"], "closed_form");
    assert_eq!(rows[0]["trials"], 20);
}

#[test]
fn seed_flag_and_env_change_the_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let base = mirs(&["sweep", path_str(&cfg)]).stdout;
    let flagged = mirs(&["sweep", path_str(&cfg), "--seed", "99"]).stdout;
    assert_ne!(base, flagged);
    let from_env = Command::new(env!("CARGO_BIN_EXE_mirs"))
        .args(["sweep", path_str(&cfg)])
        .env("MIRS_SEED", "99")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(from_env, flagged);
    let overridden = Command::new(env!("CARGO_BIN_EXE_mirs"))
        .args(["sweep", path_str(&cfg), "--seed", "3"])
        .env("MIRS_SEED", "99")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(overridden, base);
}

#[test]
fn missing_config_is_io_error() {
    let out = mirs(&["sweep", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = mirs(&["sweep", path_str(&cfg), "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_key_reports_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", "[scenario]\nirs_count = 2\nirs_elemnts = 4\n");
    let out = mirs(&["sweep", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn invalid_value_reports_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", "[scenario]\n\nirs_elements = 0\n");
    let out = mirs(&["sweep", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn unknown_solver_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = mirs(&["compare", path_str(&cfg), "--solvers", "closed_form,simulated_annealing"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_needs_a_solver() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    assert_eq!(mirs(&["compare", path_str(&cfg)]).status.code(), Some(2));
    assert_eq!(mirs(&["compare", path_str(&cfg), "--solvers", ""]).status.code(), Some(2));
}

#[test]
fn compare_lists_solvers_in_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = mirs(&["compare", path_str(&cfg), "--solvers", "random_phase,closed_form,alternating"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let solvers: Vec<&str> = text.lines().skip(1).take(3).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(solvers, ["random_phase", "closed_form", "alternating"]);
    let snr = |i: usize| text.lines().nth(i).unwrap().split(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert!(snr(2) >= snr(1));
    assert!(snr(2) >= snr(3) - 1e-9);
}

fn mmin_value(text: &str) -> f64 {
    let out = {
        let dir = TempDir::new().unwrap();
        let cfg = write_config(&dir, "mmin.toml", text);
        mirs(&["mmin", path_str(&cfg)])
    };
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("m_min = "))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn mmin_unit_when_reference_gain_matches_distance() {
    let pl = -10.0 * 400f64.log10();
    let m = mmin_value(&format!("[scenario]\nd_irs_m = 20.0\npath_loss_exponent = 2.0\npl_d0_db = {pl}\n"));
    assert!((m - 1.0).abs() < 1e-9, "{m}");
}

#[test]
fn mmin_at_reference_settings() {
    let m2 = mmin_value("[scenario]\npl_d0_db = 61.4\n");
    assert!((m2 - 23497.95).abs() < 0.01, "{m2}");
    let m26 = mmin_value("[scenario]\npl_d0_db = 61.4\npath_loss_exponent = 2.6\n");
    assert!((5e4..7e4).contains(&m26), "{m26}");
}

#[test]
fn mmin_json() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mmin.toml", "[scenario]\npl_d0_db = 61.4\n");
    let out = mirs(&["mmin", path_str(&cfg), "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["m_min"].as_f64().unwrap() > 2e4);
    assert!(doc["add_irs_gain_ratio"].as_f64().unwrap() < 1.0);
}

#[test]
fn oracle_check_passes() {
    let out = mirs(&["oracle-check", "--m", "2", "--k", "2", "--n", "2", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("oracle-check: 10/10 passed"));
}

#[test]
fn oracle_check_guard() {
    let out = mirs(&["oracle-check", "--m", "10", "--k", "3", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exceeds"));
}
