use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polysparse"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn polysparse")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn ega_solves_two_variable_demo() {
    let path = data("two_var.json");
    let out = run(&["solve", path.to_str().unwrap(), "--method", "ega"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["verified"], true);
    assert_eq!(v["support"], serde_json::json!([1]));
    let x: Vec<f64> = serde_json::from_value(v["x_hat"].clone()).unwrap();
    assert!(x[0].abs() < 1e-9 && (x[1] + 2.0).abs() < 1e-9, "{x:?}");
}

#[test]
fn every_method_recovers_demo() {
    let path = data("two_var.json");
    for m in ["l1", "rl1", "l1l2", "irl1l2", "sl1l2", "aga", "ega"] {
        let out = run(&["solve", path.to_str().unwrap(), "--method", m]);
        assert_eq!(out.status.code(), Some(0), "{m}: {}", String::from_utf8_lossy(&out.stderr));
        let v = stdout_json(&out);
        let x: Vec<f64> = serde_json::from_value(v["x_hat"].clone()).unwrap();
        assert!(x[0].abs() < 1e-5 && (x[1] + 2.0).abs() < 1e-5, "{m}: {x:?}");
        assert_eq!(v["method"], m);
    }
}

#[test]
fn missing_file_exits_with_one() {
    let out = run(&["solve", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn malformed_file_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"n": 2, "d": 2, "equations": [{"b": 1}]}"#).unwrap();
    let out = run(&["solve", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1") && err.contains('y'), "{err}");
}

#[test]
fn unreachable_tolerance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("inconsistent.json");
    // x1 = 1 and x1 = 2 at once.
    let sys = r#"{"n": 1, "d": 1, "equations": [
        {"b": 0, "y": 1, "terms": [{"alpha": [1], "coeff": 1}]},
        {"b": 0, "y": 2, "terms": [{"alpha": [1], "coeff": 1}]}]}"#;
    std::fs::write(&p, sys).unwrap();
    let out = run(&["solve", p.to_str().unwrap(), "--method", "ega"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["infeasible"], true);
    assert_eq!(v["verified"], false);
}

#[test]
fn certify_emits_all_checks() {
    let path = data("two_var.json");
    let out = run(&["certify", path.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let mu = v["mu"].as_f64().unwrap();
    assert!(mu > 0.0 && mu <= 1.0);
    assert_eq!(v["M"], 5);
    assert_eq!(v["m"], 3);
    for name in ["Thm1", "Thm3", "Cor1", "Thm7", "Thm8"] {
        assert!(v["checks"][name]["holds"].is_boolean(), "{name} missing");
    }
}

#[test]
fn lift_lists_graded_basis() {
    let out = run(&["lift", "--n", "2", "--d", "2", "--x", "3,-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let names: Vec<&str> = v["monomials"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["monomial"].as_str().unwrap())
        .collect();
    assert_eq!(names.len(), 5);
    let values: Vec<f64> = v["monomials"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["value"].as_f64().unwrap())
        .collect();
    assert_eq!(values, vec![3.0, -1.0, 9.0, -3.0, 1.0]);
}

fn bench_csv(threads: &str) -> String {
    let out = run(&[
        "bench", "--n", "8", "--d", "2", "--neq", "14", "--k", "2", "--trials", "6", "--seed", "7",
        "--methods", "irl1l2,aga,ega", "--threads", threads,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn bench_output_is_thread_independent() {
    let one = bench_csv("1");
    let many = bench_csv("8");
    assert_eq!(one, many);
    assert!(one.starts_with("experiment_id,method,n,d,N,k,trials,noise_epsilon,success_rate"));
    assert_eq!(one.lines().count(), 4);
}

#[test]
fn phase_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("phase.csv");
    let out = run(&[
        "phase", "--n", "5", "--kmax", "2", "--deltas", "1,2", "--trials", "2", "--methods", "ega,aga",
        "--output", p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&p).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "method,n,d,delta,k,trials,success_rate");
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn unknown_preset_is_an_error() {
    let out = run(&["bench", "--preset", "table99"]);
    assert_eq!(out.status.code(), Some(1));
}
