use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn auction(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auction"))
        .args(args)
        .env_remove("AUCTION_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string(value).unwrap()).unwrap();
    p
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn two_bidder(dir: &TempDir) -> PathBuf {
    write(dir, "a.json", &json!({"kind": "single_item", "budgets": [100, 3], "valuations": [10, 5]}))
}

fn hetero(dir: &TempDir) -> PathBuf {
    write(
        dir,
        "b.json",
        &json!({"kind": "single_dim", "alphas": [2, 1, 0.5], "valuations": [3, 2, 1], "budgets": [0.5, 0.9, 0.4], "divisible": false}),
    )
}

#[test]
fn run_clinching_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.json");
    let r = auction(&["run", "--mechanism", "clinching", "--input", s(&two_bidder(&dir)), "--output", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let o = read(&out);
    let p = o["payments"].as_array().unwrap();
    assert!((p[0].as_f64().unwrap() - (3.0 + 3.0 * (5.0f64 / 3.0).ln())).abs() < 1e-6);
    assert_eq!(p[1].as_f64().unwrap(), 0.0);
    assert_eq!(o["allocation"], json!([[1.0], [0.0]]));
    assert_eq!(o["meta"]["mechanism"], "clinching");
    assert!(String::from_utf8_lossy(&r.stdout).contains("revenue"));
}

#[test]
fn randomized_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = hetero(&dir);
    let run = |seed: &str| {
        let r = auction(&["run", "--mechanism", "hetero-rand", "--seed", seed, "--input", s(&input)]);
        assert_eq!(code(&r), 0);
        r.stdout
    };
    assert_eq!(run("7"), run("7"));
    let env = Command::new(env!("CARGO_BIN_EXE_auction"))
        .args(["run", "--mechanism", "hetero-rand", "--input", s(&input)])
        .env("AUCTION_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(env.stdout, run("7"));
    let o: Value = serde_json::from_slice(&run("7")).unwrap();
    assert_eq!(o["divisible"], false);
    assert_eq!(o["meta"]["seed"], 7);
}

#[test]
fn oracle_tracks_clinching() {
    let dir = TempDir::new().unwrap();
    let input = two_bidder(&dir);
    let get = |args: &[&str]| -> Vec<f64> {
        let r = auction(args);
        assert_eq!(code(&r), 0);
        let o: Value = serde_json::from_slice(&r.stdout).unwrap();
        serde_json::from_value(o["payments"].clone()).unwrap()
    };
    let exact = get(&["run", "--mechanism", "clinching", "--input", s(&input)]);
    let approx = get(&["run", "--mechanism", "oracle", "--epsilon", "1e-6", "--input", s(&input)]);
    for (a, b) in exact.iter().zip(&approx) {
        assert!((a - b).abs() <= 1e-3, "{a} vs {b}");
    }
}

#[test]
fn nt_violation_exits_one_with_witness() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "i.json",
        &json!({"kind": "single_dim", "alphas": [2, 1], "valuations": [1.5, 1], "budgets": [3, 10], "divisible": false}),
    );
    let outcome = write(&dir, "o.json", &json!({"allocation": [[0, 0], [1, 1]], "payments": [0, 0]}));
    let report = dir.path().join("r.json");
    let r = auction(&["check", "po-nt", "--input", s(&inst), "--outcome", s(&outcome), "--output", s(&report)]);
    assert_eq!(code(&r), 1);
    let rep = read(&report);
    assert_eq!(rep["verdict"], "violated");
    assert_eq!(rep["witness"]["kind"], "trade");
    assert_eq!(rep["witness"]["assignment"], json!([0, 1]));
}

#[test]
fn ir_on_zero_outcome_holds() {
    let dir = TempDir::new().unwrap();
    let outcome = write(&dir, "o.json", &json!({"allocation": [[0], [0]], "payments": [0, 0]}));
    let r = auction(&["check", "ir", "--input", s(&two_bidder(&dir)), "--outcome", s(&outcome)]);
    assert_eq!(code(&r), 0);
    let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["verdict"], "holds");
}

#[test]
fn npt_flags_negative_payment() {
    let dir = TempDir::new().unwrap();
    let outcome = write(&dir, "o.json", &json!({"allocation": [[1], [0]], "payments": [1, -0.5]}));
    let r = auction(&["check", "npt", "--input", s(&two_bidder(&dir)), "--outcome", s(&outcome)]);
    assert_eq!(code(&r), 1);
    let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["witness"], json!({"kind": "negative_payment", "agent": 1, "payment": -0.5}));
}

#[test]
fn nt_beyond_cap_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let alphas: Vec<f64> = (0..9).map(|j| 9.0 - j as f64).collect();
    let inst = write(
        &dir,
        "i.json",
        &json!({"kind": "single_dim", "alphas": alphas, "valuations": [2, 1], "budgets": [1, 1], "divisible": false}),
    );
    let outcome = write(&dir, "o.json", &json!({"allocation": [vec![1.0; 9], vec![0.0; 9]], "payments": [1, 0]}));
    let r = auction(&["check", "po-nt", "--input", s(&inst), "--outcome", s(&outcome)]);
    assert_eq!(code(&r), 4);
    let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["verdict"], "inconclusive");
}

#[test]
fn mechanism_checks_hold_for_hetero_divisible() {
    let dir = TempDir::new().unwrap();
    let input = hetero(&dir);
    for prop in ["vm", "ic", "po-structural", "ir", "npt"] {
        let r = auction(&["check", prop, "--input", s(&input), "--mechanism", "hetero-div", "--grid", "20"]);
        assert_eq!(code(&r), 0, "{prop}: {}", String::from_utf8_lossy(&r.stdout));
    }
    let r = auction(&["check", "pi", "--input", s(&input), "--mechanism", "hetero-div", "--grid", "10"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stdout));
    let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["params"]["tol"], 1e-6);
}

#[test]
fn randomized_mechanism_is_refused_for_ic() {
    let dir = TempDir::new().unwrap();
    let r = auction(&["check", "ic", "--input", s(&hetero(&dir)), "--mechanism", "hetero-rand"]);
    assert_eq!(code(&r), 2);
    let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["error"]["kind"], "invalid_input");
}

#[test]
fn wmon_check_reads_pairs() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "m.json", &json!({"kind": "multi_dim", "valuations": [[4, 5], [3, 4]], "budgets": [5, 8]}));
    let pairs = write(&dir, "p.json", &json!([{"agent": 1, "report": [3, 4], "alternative": [3.02, 3.99]}]));
    let r = auction(&["check", "wmon", "--input", s(&inst), "--pairs", s(&pairs)]);
    assert_eq!(code(&r), 1, "{}", String::from_utf8_lossy(&r.stdout));
    let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["witness"]["kind"], "weak_monotonicity");
}

#[test]
fn multidim_demo_certificate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c.json");
    let r = auction(&["demo", "multidim", "--alpha", "0.02", "--beta", "0.01", "--output", s(&out)]);
    assert_eq!(code(&r), 0);
    let c = read(&out);
    assert_eq!(c["bound"], 11.0);
    assert_eq!(c["contradiction"], true);
}

#[test]
fn multidim_demo_rejects_bad_perturbations() {
    // alpha <= beta, and a perturbation large enough to leave Case 3.
    for (a, b) in [("0.1", "0.2"), ("0.2", "0.1")] {
        let r = auction(&["demo", "multidim", "--alpha", a, "--beta", b]);
        assert_eq!(code(&r), 2);
        let rep: Value = serde_json::from_slice(&r.stdout).unwrap();
        assert_eq!(rep["error"]["kind"], "invalid_input");
    }
}

#[test]
fn singdim_demo_reports_conflict() {
    let r = auction(&["demo", "singdim", "--alphas", "2,1", "--v2", "1", "--b1", "3", "--v1", "1.5"]);
    assert_eq!(code(&r), 0);
    let b: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(b["ir_conflict"], true);
    assert_eq!(b["window"], json!([1.0, 2.0]));
    let bounds: Vec<f64> = b["sets"].as_array().unwrap().iter().map(|s| s["lower_bound"].as_f64().unwrap()).collect();
    assert_eq!(bounds, [2.0, 4.0, 6.0]);
}

#[test]
fn bad_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let tie = write(&dir, "t.json", &json!({"kind": "single_item", "budgets": [1, 1], "valuations": [2, 2]}));
    assert_eq!(code(&auction(&["run", "--mechanism", "clinching", "--input", s(&tie)])), 2);
    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{not json").unwrap();
    assert_eq!(code(&auction(&["run", "--mechanism", "clinching", "--input", s(&junk)])), 2);
    assert_eq!(code(&auction(&["run", "--mechanism", "nope", "--input", s(&junk)])), 2);
    let multi = write(&dir, "m.json", &json!({"kind": "multi_dim", "valuations": [[1, 2]], "budgets": [1]}));
    assert_eq!(code(&auction(&["run", "--mechanism", "hetero-div", "--input", s(&multi)])), 2);
}

#[test]
fn outcome_file_round_trips_through_check() {
    let dir = TempDir::new().unwrap();
    let input = hetero(&dir);
    let out = dir.path().join("o.json");
    assert_eq!(code(&auction(&["run", "--mechanism", "hetero-div", "--input", s(&input), "--output", s(&out)])), 0);
    let v = read(&out);
    assert_eq!(v["meta"]["mechanism"], "hetero-div");
    let r = auction(&["check", "po-structural", "--input", s(&input), "--outcome", s(&out)]);
    assert_eq!(code(&r), 0);
}
