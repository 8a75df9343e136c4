use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsetrack"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, r#"{"m": 40, "s0": 4, "sa": 1, "d": 2, "r": 1.0, "n": 25, "c": 0.01, "horizon": 5, "trials": 2}"#);
    let out = dir.path().join("out");
    let o = run(&["--seed", "3", "--threads", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("algorithm,t,nmse,misses,extras\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 5);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 3);
    assert!(std::fs::read_to_string(out.join("results.svg")).unwrap().contains("class=\"panel\""));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, r#"{"m": 30, "s0": 3, "sa": 1, "d": 2, "r": 1.0, "n": 20, "c": 0.05, "horizon": 4, "trials": 3, "seed": 11}"#);
    let mut csvs = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{k}"));
        let o = run(&["--threads", threads, "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        csvs.push(std::fs::read_to_string(out.join("results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(&cfg, r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1, "trials": 0}"#);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["reproduce-fig1", "--regime", "r9d9", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--threads", "0", "gen-matrix", "--n", "3", "--m", "5", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["analyze-matrix", "--matrix", dir.path().join("missing.csv").to_str().unwrap(), "--delta-orders", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn matrix_round_trip_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let o = run(&["--seed", "5", "gen-matrix", "--kind", "frame", "--m", "8", "--out", a.to_str().unwrap()]);
    assert!(o.status.success());
    let consts = dir.path().join("c.json");
    let o = run(&[
        "analyze-matrix",
        "--matrix",
        a.to_str().unwrap(),
        "--delta-orders",
        "2,3",
        "--theta-pairs",
        "1:1,1:2",
        "--out",
        consts.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // Equiangular frame with 8 columns: delta_S = (S − 1)/7.
    let d3 = v["delta"].as_array().unwrap().iter().find(|e| e["order"] == 3).unwrap()["value"].as_f64().unwrap();
    assert!((d3 - 2.0 / 7.0).abs() < 1e-10);
    let o = run(&["analyze-matrix", "--matrix", a.to_str().unwrap(), "--theta-pairs", "1-2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_conditions_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    assert!(run(&["--seed", "1", "gen-matrix", "--kind", "frame", "--m", "16", "--out", a.to_str().unwrap()]).status.success());
    let params = dir.path().join("p.json");
    write(&params, r#"{"variant": "T1-modcs", "s0": 2, "sa": 1, "r": 1.0, "eps": 0.01, "alpha": 0.1}"#);
    let o = run(&["check-conditions", "--variant", "T2-aldl", "--params", params.to_str().unwrap(), "--matrix", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["variant"], "T2-aldl");
    assert!(report["entries"].as_array().unwrap().iter().any(|e| e["key"] == "theta"));

    let consts = dir.path().join("c.json");
    write(&consts, r#"{"fingerprint": "", "delta": [], "theta": []}"#);
    let o = run(&["check-conditions", "--params", params.to_str().unwrap(), "--constants", consts.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
