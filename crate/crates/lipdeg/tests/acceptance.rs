//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line with its runtime. Tolerances are pinned here, separately
//! from the thresholds inside `lipdeg::verify`, so a drift in either shows up.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use lipdeg::verify::{criterion, CriterionReport, Scale};
use serde_json::Value;

const SEED: u64 = 20240601;

// The heavy criteria each allocate gigabytes at 64⁴; run them one at a time
// so runtimes are measured on an otherwise idle machine.
static SERIAL: Mutex<()> = Mutex::new(());

fn run(id: u8, budget_secs: u64) -> CriterionReport {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let rep = criterion(id, SEED, Scale::Full).expect("criterion runs");
    let elapsed = start.elapsed();
    let within = elapsed <= Duration::from_secs(budget_secs);
    println!(
        "criterion {id:>2}: {} ({:.2}s of {budget_secs}s) {}",
        if rep.passed && within { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        rep.title
    );
    println!("{}", serde_json::to_string(&rep.metrics).unwrap());
    assert!(within, "criterion {id} took {elapsed:?}, budget {budget_secs}s");
    rep
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn metric<'a>(rep: &'a CriterionReport, key: &str) -> &'a Value {
    rep.metrics.get(key).unwrap_or_else(|| panic!("missing metric {key}"))
}

#[test]
fn criterion_01_wedge_signatures() {
    let rep = run(1, 1);
    assert_eq!(metric(&rep, "lambda2_r4"), &serde_json::json!([3, 3, 0]));
    assert_eq!(metric(&rep, "lambda4_r8"), &serde_json::json!([35, 35, 0]));
    assert!(rep.passed);
}

#[test]
fn criterion_02_xk_verdicts() {
    let rep = run(2, 60);
    for v in metric(&rep, "verdicts").as_array().unwrap() {
        let k = v["k"].as_u64().unwrap();
        if k <= 3 {
            assert_eq!(v["status"], "scalable", "k = {k}");
            assert!(num(&v["witness_defect"]) < 1e-6, "k = {k}");
        } else {
            assert_eq!(v["status"], "not_scalable", "k = {k}");
        }
    }
    assert_eq!(metric(&rep, "k4_restarts"), 100);
    assert!(num(metric(&rep, "k4_best_defect")) > 1e-2);
    assert!(rep.passed);
}

#[test]
fn criterion_03_kge4_counterexample() {
    let rep = run(3, 1);
    assert_eq!(metric(&rep, "lhs"), "1");
    assert_eq!(metric(&rep, "rhs"), "0");
    assert!(rep.passed);
}

#[test]
fn criterion_04_lp_battery() {
    let rep = run(4, 120);
    let cases = metric(&rep, "cases").as_array().unwrap();
    assert_eq!(cases.len(), 6);
    for c in cases {
        assert!(num(&c["reconstruction"]) < 1e-10, "{c}");
        assert!(num(&c["commutation"]) < 1e-10, "{c}");
        let o = num(&c["orthogonality_ratio"]);
        assert!((0.1..=1.0).contains(&o), "{c}");
        for s in c["support"].as_array().unwrap() {
            assert_eq!(s["passed"], true, "{c}");
        }
    }
    assert!(rep.passed);
}

#[test]
fn criterion_05_primitive_rate() {
    let rep = run(5, 60);
    assert_eq!(metric(&rep, "trials"), 20);
    assert_eq!(metric(&rep, "bands"), &serde_json::json!([3, 4, 5, 6, 7]));
    let slope = num(metric(&rep, "slope"));
    assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
    assert!(rep.passed);
}

#[test]
fn criterion_06_sphere_degrees() {
    let rep = run(6, 30);
    for m in metric(&rep, "maps").as_array().unwrap() {
        let d = num(&m["d"]);
        assert!((num(&m["degree"]) - d * d).abs() <= 1e-5, "{m}");
    }
    assert!(num(metric(&rep, "lipschitz_spread")) <= 2.0);
    assert!(rep.passed);
}

#[test]
fn criterion_07_recursion() {
    let rep = run(7, 1);
    assert!(num(metric(&rep, "warmup_band_ratio")) <= 4.0);
    for p in metric(&rep, "plans").as_array().unwrap() {
        assert!(num(&p["max_normalized"]) <= num(&p["guaranteed_constant"]), "{p}");
        if num(&p["d"]) <= 2.0 {
            assert!(num(&p["max_step_ratio"]) <= 2.0 * num(&p["p"]), "{p}");
        }
    }
    assert!(rep.passed);
}

#[test]
fn criterion_08_exponent_fits() {
    let rep = run(8, 10);
    let e = num(metric(&rep, "polylog_exponent"));
    assert!((e + 0.5).abs() <= 0.1, "exponent {e}");
    assert!(num(metric(&rep, "gap_min_bound_over_l38")) <= 1.0);
    assert!(rep.passed);
}

#[test]
fn criterion_09_end_to_end() {
    let rep = run(9, 300);
    assert_eq!(metric(&rep, "n"), 64);
    for f in metric(&rep, "forms").as_array().unwrap() {
        assert!(num(&f["closedness"]) < 1e-9, "{f}");
        assert!(num(&f["profile_rel_error"]) <= 0.05, "{f}");
    }
    for b in metric(&rep, "bounds").as_array().unwrap() {
        assert!(num(&b["min_bound_over_l4"]) < 1.0, "{b}");
    }
    assert!(rep.passed);
}

#[test]
fn criterion_10_weight_exponents() {
    let rep = run(10, 1);
    assert_eq!(metric(&rep, "degree_exponent"), "20/3");
    assert_eq!(metric(&rep, "alpha"), "3/5");
    assert_eq!(metric(&rep, "d"), 1);
    assert!(rep.passed);
}

#[test]
fn criterion_11_determinism() {
    let rep = run(11, 300);
    assert_eq!(metric(&rep, "ok_identical"), true);
    assert!(rep.passed);
}
