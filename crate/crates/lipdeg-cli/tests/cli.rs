use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lipdeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipdeg")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(lipdeg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lipdeg(&["plan", "--levels", "many"]).status.code(), Some(2));
}

#[test]
fn xk_verdicts() {
    let three = lipdeg(&["scalable", "--preset", "Xk", "--k", "3", "--seed", "5"]);
    assert_eq!(three.status.code(), Some(0));
    let v = json(&three);
    assert_eq!(v["result"]["verdict"]["status"], "scalable");
    assert_eq!(v["seed"], 5);
    let four = json(&lipdeg(&["scalable", "--preset", "Xk", "--k", "4"]));
    assert_eq!(four["result"]["verdict"]["status"], "not_scalable");
}

#[test]
fn malformed_inputs_are_domain_errors() {
    let dir = tempdir("malformed");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"n\": 4,\n \"generators\": [").unwrap();
    let out = lipdeg(&["scalable", "--presentation", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let junk = dir.join("junk.gfrm");
    std::fs::write(&junk, b"GFRM\x02\x00").unwrap();
    let out = lipdeg(&["lp", "--input", junk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 4"));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("lipdeg-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn synth_then_bound() {
    let dir = tempdir("synth");
    let d = dir.to_str().unwrap();
    let out = lipdeg(&["synth", "--n", "16", "--levels", "2", "--forms", "2", "--seed", "9", "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in json(&out)["result"]["files"].as_array().unwrap() {
        assert!(f["closedness"].as_f64().unwrap() < 1e-9);
    }
    let f0 = dir.join("form_0.gfrm");
    let f1 = dir.join("form_1.gfrm");
    // Layer mass 4² at L = 4, rescaled to L = 64: (64/4)² = 256.
    let out = lipdeg(&[
        "bound",
        "--input",
        f0.to_str().unwrap(),
        f1.to_str().unwrap(),
        "--lipschitz",
        "64",
        "--mass-scale",
        "256",
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert!(r["result"]["min_bound"].as_f64().unwrap() < 64f64.powi(4));
    let csv = std::fs::read_to_string(Path::new(d).join("cutoffs.csv")).unwrap();
    assert!(csv.lines().nth(1) == Some("cutoff,high,low,cross,total"));
}

#[test]
fn plan_and_profile_tables() {
    let dir = tempdir("tables");
    let d = dir.to_str().unwrap();
    assert_eq!(lipdeg(&["plan", "--p", "2", "--levels", "8", "--d", "2", "--out", d]).status.code(), Some(0));
    let plan = std::fs::read_to_string(dir.join("plan.csv")).unwrap();
    assert_eq!(plan.lines().count(), 2 + 8);
    let out = lipdeg(&["profile", "--from", "10", "--to", "20", "--out", d]);
    let e = json(&out)["result"]["exponent"].as_f64().unwrap();
    assert!((e + 0.5).abs() <= 0.1, "{e}");
    assert!(lipdeg(&["plan", "--d-scale", "0.9"]).status.code() == Some(1));
}

#[test]
fn verify_is_byte_identical() {
    let args = ["verify", "--scale", "quick", "--only", "1,2,3,4,5,6,7,8,9,10", "--seed", "11"];
    let a = lipdeg(&args);
    let b = lipdeg(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 11);
}
