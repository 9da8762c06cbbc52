use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_recommerce");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RECOMMERCE_OUT", dir.join("out"))
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const OLG_REFERENCE: &str = r#"{"schema": 1, "params": {"v_h": 1.0, "v_l": 0.8, "n_h": 0.3, "n_l": 0.7,
  "delta": 0.5, "alpha": 0.95, "beta": 0.05,
  "cost": {"family": "power-cost", "c0": 0.5, "p": 2.0},
  "quality": {"family": "saturating-exp-quality", "s_bar": 1.0, "k": 1.0}}}"#;

#[test]
fn solve_writes_two_rows_and_json() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["solve", "--regime", "both"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(t.path(), "solve.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "regime,market_mode,D_star,D_social,p1n,p2n,p2u,profit_total,commission_revenue,welfare"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("third-party,ActivePreOwned,0.0673"));
    assert!(lines[2].starts_with("branded,ActivePreOwned,0.1238"));
    let json: serde_json::Value = serde_json::from_str(&read(t.path(), "solve.json")).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
}

#[test]
fn numbers_have_at_most_twelve_significant_digits() {
    let t = TempDir::new().unwrap();
    run(t.path(), &["solve"]);
    for field in read(t.path(), "solve.csv").lines().nth(1).unwrap().split(',').skip(2) {
        let digits: String = field.chars().filter(|c| c.is_ascii_digit()).collect();
        assert!(digits.trim_start_matches('0').len() <= 12, "{field}");
    }
}

#[test]
fn shutdown_is_explained() {
    let t = TempDir::new().unwrap();
    let cfg = config(
        t.path(),
        r#"{"schema": 1, "params": {"v_h": 1.0, "v_l": 0.4, "n_h": 0.3, "n_l": 0.7, "delta": 0.9, "alpha": 0.9, "beta": 0.2,
            "cost": {"family": "power-cost", "c0": 0.5, "p": 2.0},
            "quality": {"family": "saturating-exp-quality", "s_bar": 1.0, "k": 1.0}}}"#,
    );
    let o = run(t.path(), &["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("market shutdown, lower types excluded"));
}

#[test]
fn invalid_parameters_exit_2_with_report() {
    let t = TempDir::new().unwrap();
    let cfg = config(
        t.path(),
        r#"{"schema": 1, "params": {"v_h": 1.0, "v_l": 0.8, "n_h": 0.7, "n_l": 0.3, "delta": 0.9, "alpha": 0.9, "beta": 0.2,
            "cost": {"family": "power-cost", "c0": 0.5, "p": 2.0},
            "quality": {"family": "saturating-exp-quality", "s_bar": 1.0, "k": 1.0}}}"#,
    );
    let o = run(t.path(), &["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[FAIL] n_L > n_H"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["solve", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"));
    let cfg = config(t.path(), r#"{"schema": 1, "colour": "red"}"#);
    assert_eq!(run(t.path(), &["solve", "--config", &cfg]).status.code(), Some(2));
    let cfg = config(t.path(), r#"{"schema": 7}"#);
    assert_eq!(run(t.path(), &["solve", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(t.path(), &["solve", "--model", "three-period"]).status.code(), Some(2));
    assert_eq!(run(t.path(), &["solve", "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn output_directory_precedence() {
    let t = TempDir::new().unwrap();
    let flag_dir = t.path().join("flagged");
    let o = Command::new(BIN)
        .args(["solve", "--out", flag_dir.to_str().unwrap()])
        .env("RECOMMERCE_OUT", t.path().join("from_env"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("solve.csv").exists());
    assert!(!t.path().join("from_env").exists());

    let cfg = config(t.path(), r#"{"schema": 1, "out_dir": "from_config"}"#);
    let o = Command::new(BIN)
        .args(["solve", "--config", &cfg])
        .env("RECOMMERCE_OUT", t.path().join("from_env"))
        .current_dir(t.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(t.path().join("from_env/solve.csv").exists());
    assert!(!t.path().join("from_config").exists());
}

#[test]
fn json_only_format() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["solve", "--format", "json", "--jobs", "1"]);
    assert!(o.status.success());
    assert!(t.path().join("out/solve.json").exists());
    assert!(!t.path().join("out/solve.csv").exists());
}

#[test]
fn olg_solve_uses_steady_state_columns() {
    let t = TempDir::new().unwrap();
    let cfg = config(t.path(), OLG_REFERENCE);
    let o = run(t.path(), &["solve", "--config", &cfg, "--model", "olg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(t.path(), "solve.csv");
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[0], "branded");
    assert_eq!(row[1], "ActivePreOwned");
    assert!(row[2].starts_with("0.10855"));
    assert_eq!(row[3], "");
}

#[test]
fn alpha_sweep_has_two_rows_per_point() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["sweep", "--param", "alpha", "--from", "0.75", "--to", "1.0", "--steps", "26"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(t.path(), "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param_value,regime,D_star,profit,welfare,envelope_deriv,fd_deriv,market_mode"
    );
    assert_eq!(lines.count(), 52);
    assert!(stdout(&o).contains("StrictlyIncreasing"));
}

#[test]
fn beta_sweep_past_threshold_marks_shutdown() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["sweep", "--param", "beta", "--from", "0", "--to", "0.5", "--steps", "11", "--regime", "third-party"]);
    assert!(o.status.success());
    let csv = read(t.path(), "sweep.csv");
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("0.5,third-party,0,"));
    assert!(last.ends_with(",Shutdown"));
}

#[test]
fn sweep_edge_cases() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["sweep", "--param", "delta", "--from", "0.9", "--steps", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("NotApplicable"));
    let o = run(t.path(), &["sweep", "--param", "beta", "--from", "0.9", "--to", "0.95", "--steps", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty active region"));
    assert_eq!(run(t.path(), &["sweep", "--param", "alpha"]).status.code(), Some(2));
    assert_eq!(run(t.path(), &["sweep", "--param", "gamma", "--from", "0", "--steps", "1"]).status.code(), Some(2));
}

#[test]
fn compare_reports_gap_and_commission_curve() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["compare"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("beta = 0"));
    assert_eq!(read(t.path(), "commission.csv").lines().count(), 1002);
    let json: serde_json::Value = serde_json::from_str(&read(t.path(), "compare.json")).unwrap();
    let gap = json["comparison"]["d_gap"].as_f64().unwrap();
    assert!((gap - 0.0565).abs() < 2e-3);
}

#[test]
fn olg_verify_table_has_one_steady_state() {
    let t = TempDir::new().unwrap();
    let cfg = config(t.path(), OLG_REFERENCE);
    let o = run(t.path(), &["olg-verify", "--config", &cfg, "--regime", "branded"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 steady state(s)"));
    assert!(stdout(&o).contains("independent audit: pass"));
    let csv = read(t.path(), "olg_verify.csv");
    assert_eq!(csv.lines().count(), 244);
    let winners: Vec<&str> = csv.lines().filter(|l| l.ends_with(",true")).collect();
    assert_eq!(winners.len(), 1);
    assert!(winners[0].starts_with("x=n_H,L2=buy-used;H2=sell-used+buy-new;L1=buy-used;H1=buy-new,"));
}

#[test]
fn oracle_check_agrees() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["oracle-check", "--grid-points", "100001"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(read(t.path(), "oracle_check.csv").lines().count(), 4);
    assert_eq!(run(t.path(), &["oracle-check", "--grid-points", "10"]).status.code(), Some(2));
}

const SMALL: [&str; 10] =
    ["--draws", "8", "--oracle-draws", "2", "--audit-draws", "2", "--grid-points", "10001", "--commission-points", "101"];

#[test]
fn verify_requires_seed_and_draws() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["verify", "--draws", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
    let o = run(t.path(), &["verify", "--seed", "1", "--draws", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty verification"));
}

#[test]
fn verify_small_suite_passes_then_inverted_fails() {
    let t = TempDir::new().unwrap();
    let mut args = vec!["verify", "--seed", "3"];
    args.extend(SMALL);
    let o = run(t.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(read(t.path(), "verify.csv").lines().count(), 10);
    assert!(!t.path().join("out/counterexample.json").exists());

    args.push("--invert-ordering");
    let o = run(t.path(), &args);
    assert_eq!(o.status.code(), Some(1));
    let dump: serde_json::Value = serde_json::from_str(&read(t.path(), "counterexample.json")).unwrap();
    assert_eq!(dump["id"], 4);
    assert!(dump["counterexample"]["params"]["alpha"].is_number());
}

#[test]
fn verify_seed_from_config() {
    let t = TempDir::new().unwrap();
    let cfg = config(
        t.path(),
        r#"{"schema": 1, "verify": {"seed": 11, "draws": 4, "oracle_draws": 1, "audit_draws": 1,
            "grid_points": 10001, "commission_points": 51}}"#,
    );
    let o = run(t.path(), &["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let json: serde_json::Value = serde_json::from_str(&read(t.path(), "verify.json")).unwrap();
    assert_eq!(json["spec"]["seed"], 11);
    assert_eq!(json["spec"]["draws"], 4);
}
