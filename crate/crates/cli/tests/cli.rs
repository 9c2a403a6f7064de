use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn aaflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aaflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn params_json(a: [f64; 6]) -> String {
    format!(
        r#"{{"balanced_params":{{"A22":{},"A23":{},"A24":{},"A25":{},"A32":{},"A35":{}}}}}"#,
        a[0], a[1], a[2], a[3], a[4], a[5]
    )
}

fn analyze_json(input: &Path, tau: &str) -> Value {
    let out = aaflow(&["analyze", input.to_str().unwrap(), "--tau", tau]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_a22_solvable() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a22.json", &params_json([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    let v = analyze_json(&input, "-1");
    assert_eq!(v["balanced"], true);
    assert_eq!(v["kahler"], false);
    assert!((v["K"].as_f64().unwrap() + 2.0).abs() < 1e-12);
    let slope = v["report"]["classification"]["SolvableWithSlope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 1e-12);
}

#[test]
fn analyze_kahler_any_slope() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "k.json", &params_json([0.0, 1.0, 0.5, 2.0, -1.0, 0.5]));
    let v = analyze_json(&input, "1");
    assert_eq!(v["kahler"], true);
    assert_eq!(v["report"]["classification"], "KahlerAnySlope");
}

#[test]
fn analyze_nontrivial_canonical_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "a1.json",
        r#"{"a": 1, "v": [0,0,0,0], "A": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#,
    );
    let v = analyze_json(&input, "0");
    assert_eq!(v["trivial_canonical"], false);
    // tr A = 0 and v = 0, so balanced, but not a reduced balanced expansion.
    assert_eq!(v["balanced"], true);
    assert!(v["balanced_params"].is_null());
    assert!(v["report"].is_null());
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"balanced_params":{"A22":1}}"#);
    let out = aaflow(&["analyze", bad.to_str().unwrap(), "--tau", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("balanced_params.A23"));
    let junk = write(dir.path(), "junk.json", "{not json");
    assert_eq!(aaflow(&["analyze", junk.to_str().unwrap(), "--tau", "1"]).status.code(), Some(2));
    let out = aaflow(&["flow", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flow_a22_decays() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a22.json", &params_json([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    let csv = dir.path().join("traj.csv");
    let out = aaflow(&[
        "flow",
        input.to_str().unwrap(),
        "--tau",
        "0.5",
        "--t-end",
        "100",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "norm_Aplus_sq").unwrap();
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last[0], 100.0);
    assert!(last[col] <= 4.0 / 51.0 * (1.0 + 1e-6));

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "flow");
    assert_eq!(manifest["exit_code"], 0);
    assert!(manifest["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn flow_kahler_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "k.json", &params_json([0.0, 1.0, 0.5, 2.0, -1.0, 0.5]));
    let out = aaflow(&["flow", input.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "converged");
    assert_eq!(v["trajectory"].as_array().unwrap().len(), 1);
}

#[test]
fn flow_zero_slope_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a22.json", &params_json([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    // K = -2 at tau = -1, so f = 1 + alpha'/2 vanishes at alpha' = -2.
    let out = aaflow(&[
        "flow",
        input.to_str().unwrap(),
        "--tau",
        "-1",
        "--alpha-prime",
        "-2",
        "--t-end",
        "5",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for p in v["trajectory"].as_array().unwrap() {
        assert_eq!(p["params"]["A22"], 1.0);
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("f(A_0) = 0"));
}

#[test]
fn flow_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", &params_json([0.3, -0.2, 0.7, 0.1, 0.4, -0.9]));
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = aaflow(&[
            "flow",
            input.to_str().unwrap(),
            "--tau",
            "2",
            "--alpha-prime",
            "0.5",
            "--t-end",
            "20",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn flow_blowup_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a22.json", &params_json([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    let out = aaflow(&[
        "flow",
        input.to_str().unwrap(),
        "--tau",
        "-1",
        "--alpha-prime",
        "-4",
        "--t-end",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside-theorem-hypotheses"));
}

#[test]
fn verify_is_deterministic() {
    let a = aaflow(&["verify", "--draws", "1", "--seed", "0"]);
    let b = aaflow(&["verify", "--draws", "1", "--seed", "0"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_detects_injected_fault() {
    let out = aaflow(&["verify", "--draws", "1", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    let failing: Vec<&str> = text.lines().filter(|l| l.ends_with("FAIL") && !l.starts_with("seed")).collect();
    assert_eq!(failing.len(), 1, "{text}");
    assert!(failing[0].starts_with("closed_form_trace"));
}

#[test]
fn example_reference_exit_codes() {
    let printed = aaflow(&["example", "--t-end", "2", "--samples", "5"]);
    assert_eq!(printed.status.code(), Some(1));
    let ode = aaflow(&["example", "--t-end", "2", "--samples", "5", "--reference", "ode"]);
    assert_eq!(ode.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ode.stdout).contains("PASS"));
}
