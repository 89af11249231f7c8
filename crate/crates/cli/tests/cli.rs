use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const REFERENCE_MODEL: &str = r#"{"atoms": [{"w": 1.65, "p": 0.38}, {"w": -2.52, "p": 0.62}], "D": 1.0}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bandit-minimax"));
    c.arg("--quiet");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn digests(m: &Value) -> Vec<(String, String)> {
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["path"].as_str().unwrap().to_string(), o["sha256"].as_str().unwrap().to_string()))
        .collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn model_file(dir: &Path) -> std::path::PathBuf {
    let f = dir.join("model.json");
    fs::write(&f, REFERENCE_MODEL).unwrap();
    f
}

#[test]
fn unstable_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = model_file(dir.path());
    let out = run(&["solve-pde", "--config", p(&cfg), "--dt", "1/100", "--dx", "0.05", "--out-risk", p(&dir.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt/dx^2 < 1"));
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["solve-pde", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["reproduce", "--figure", "9"]).status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn bad_prior_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"atoms": [{"w": 1.0, "p": 0.3}, {"w": -1.0, "p": 0.3}]}"#).unwrap();
    let out = run(&["solve-pde", "--config", p(&cfg), "--grid", "coarse", "--out-risk", p(&dir.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid prior"));
}

#[test]
fn solve_pde_is_reproducible_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = model_file(dir.path());
    let args = |sub: &str| {
        let d = dir.path().join(sub);
        vec![
            "solve-pde".to_string(),
            "--config".into(),
            p(&cfg).into(),
            "--dt".into(),
            "1/500".into(),
            "--dx".into(),
            "0.05".into(),
            "--t-stride".into(),
            "10".into(),
            "--out-risk".into(),
            p(&d.join("risk.csv")).into(),
        ]
    };
    let a: Vec<String> = args("a");
    let b: Vec<String> = args("b");
    ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    ok(&b.iter().map(String::as_str).collect::<Vec<_>>());
    let (ma, mb) = (manifest(&dir.path().join("a")), manifest(&dir.path().join("b")));
    assert_eq!(ma["subcommand"], "solve-pde");
    assert!(ma["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(ma["config"]["model"]["D"], 1.0);
    let (da, db) = (digests(&ma), digests(&mb));
    assert_eq!(da.len(), 2);
    for ((pa, ha), (_, hb)) in da.iter().zip(&db) {
        assert_eq!(ha.len(), 64);
        assert_eq!(ha, hb, "{pa}");
    }
    let (header, rows) = read_csv(&dir.path().join("a/threshold.csv"));
    assert_eq!(header, ["t", "T"]);
    assert_eq!(rows.len(), 500);
    let risk = ma["summary"]["risk_at_origin"].as_f64().unwrap();
    assert!((risk - 0.373).abs() < 0.01, "{risk}");
    assert_eq!(ma["summary"]["invariants_hold"], true);
}

#[test]
fn variance_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = model_file(dir.path());
    let out = dir.path().join("risk_eps.csv");
    ok(&["batch-dp", "--config", p(&cfg), "--variance", "0.5", "--schedule", "10", "--step", "0.05", "--x-stride", "20", "--out", p(&out)]);
    let m = manifest(dir.path());
    assert_eq!(m["config"]["model"]["D"], 0.5);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["stage", "t", "x", "r", "action"]);
    // Ten decision stages plus the terminal row, 13 nodes each after striding.
    assert_eq!(rows.len(), 11 * 13);
    assert!(rows[..130].iter().all(|r| r[3] >= 0.0 && (r[4] == 1.0 || r[4] == 2.0)));
    assert!(rows[130..].iter().all(|r| r[3] == 0.0 && r[4] == 0.0));
}

#[test]
fn worst_prior_then_losses_and_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let worst = d.join("worst.json");
    let thr = d.join("threshold.csv");
    ok(&[
        "worst-prior", "--search-dt", "1/500", "--search-dx", "0.05", "--final-grid", "coarse", "--lattice", "3",
        "--tol", "0.05", "--trace", "--out", p(&worst), "--thresholds", p(&thr),
    ]);
    let w: Value = serde_json::from_str(&fs::read_to_string(&worst).unwrap()).unwrap();
    assert!((w["risk"].as_f64().unwrap() - 0.37).abs() < 0.02, "{w}");
    assert!(!w["trace"].as_array().unwrap().is_empty());

    let losses = d.join("losses.csv");
    ok(&[
        "losses", "--strategy", p(&thr), "--d-min", "-4", "--d-max", "4", "--points", "9", "--grid", "coarse",
        "--initial-stage", "0.02", "--out", p(&losses),
    ]);
    let (header, rows) = read_csv(&losses);
    assert_eq!(header, ["d", "loss", "loss_with", "loss_without"]);
    assert_eq!(rows.len(), 9);
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!(peak <= w["risk"].as_f64().unwrap() + 0.02, "{peak}");
    assert!(rows.iter().all(|r| r[2] >= r[3]));

    let sim = d.join("sim.csv");
    let args = [
        "simulate", "--strategy", p(&thr), "--d-min", "-2", "--d-max", "2", "--points", "3", "--reps", "300",
        "--seed", "5", "--out", p(&sim),
    ];
    ok(&args);
    let first = fs::read(&sim).unwrap();
    ok(&["--threads", "1"].iter().chain(&args).copied().collect::<Vec<_>>());
    assert_eq!(first, fs::read(&sim).unwrap());
    let (header, rows) = read_csv(&sim);
    assert_eq!(header, ["d", "mean", "se", "reps"]);
    assert!(rows.iter().all(|r| r[3] == 300.0 && r[2] > 0.0));
}

#[test]
fn bernoulli_from_file_and_mapped() {
    let dir = tempfile::tempdir().unwrap();
    let prior = dir.path().join("prior.json");
    fs::write(&prior, r#"{"atoms": [{"p2": 0.7, "q": 0.5}, {"p2": 0.3, "q": 0.5}]}"#).unwrap();
    let out = dir.path().join("bern.json");
    ok(&["bernoulli-dp", "--p", "0.5", "--prior", p(&prior), "--N", "2", "--n0", "1", "--out", p(&out)]);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    // Forced play costs 0.1; after a failure (prob 1/2) the known arm is
    // chosen with posterior loss 0.3·0.2 / 0.5.
    assert!((v["result"]["risk"].as_f64().unwrap() - 0.16).abs() < 1e-12, "{v}");

    let cfg = model_file(dir.path());
    ok(&["bernoulli-dp", "--p", "0.5", "--mapped-from", p(&cfg), "--N", "400", "--out", p(&out)]);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["model"]["n0"], 20);
    let scaled = v["result"]["scaled_risk"].as_f64().unwrap();
    assert!((scaled - 0.37).abs() < 0.05, "{scaled}");

    let big = run(&["bernoulli-dp", "--p", "0.5", "--prior", p(&prior), "--N", "6000", "--out", p(&out)]);
    assert_eq!(big.status.code(), Some(2));
}

#[test]
fn reproduce_figure_six_matches_limit_curve() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["reproduce", "--figure", "6", "--fast", "--reps", "1000", "--out-dir", p(dir.path())]);
    let fig = dir.path().join("fig6");
    let m = manifest(&fig);
    assert_eq!(digests(&m).len(), 4);
    let (_, sim) = read_csv(&fig.join("sim.csv"));
    let (_, limit) = read_csv(&fig.join("losses.csv"));
    let s = sim.iter().find(|r| r[0] == 1.65).unwrap();
    let l = limit.iter().find(|r| r[0] == 1.65).unwrap();
    assert!((s[1] - l[1]).abs() < 3.0 * s[2], "sim {s:?} limit {l:?}");
    assert!(!dir.path().join("fig1").exists());
}
