use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bsd_lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsd-lab"))
        .args(args)
        .current_dir(dir)
        .env("BSD_LAB_THREADS", "0")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        ("coin.csv", "atom,prob\n0,0.5\n1,0.5\n"),
        ("sure.csv", "atom,prob\n0.5,1\n"),
        ("risky.csv", "atom,prob\n0,0.25\n1,0.75\n"),
        ("counterexample.json", r#"{"kind": "ap_not_lp_counterexample", "n": 2, "b": 1.0}"#),
        ("affine.json", r#"{"kind": "affine", "alpha": 0.0, "beta": 1.0}"#),
        ("bogus.json", r#"{"kind": "bogus"}"#),
        ("data/scenarios.csv", "prob,hi,lo\n0.3,0.3,0.1\n0.3,0.5,0.5\n0.4,0.9,0.6\n"),
        ("data/bench.csv", "atom,prob\n0.1,0.3\n0.5,0.3\n0.6,0.4\n"),
        ("data/single.csv", "prob,only\n0.5,0.2\n0.5,0.6\n"),
        ("data/high.csv", "atom,prob\n0.95,1\n"),
        ("data/low.csv", "atom,prob\n0.1,0.5\n0.6,0.5\n"),
        (
            "data/dominated.json",
            r#"{"scenarios_csv": "scenarios.csv", "benchmark_csv": "bench.csv", "n": 2, "a": 0, "b": 1, "tolerance": 1e-9}"#,
        ),
        ("data/single.json", r#"{"scenarios_csv": "single.csv", "benchmark_csv": "low.csv", "n": 2, "a": 0, "b": 1}"#),
        ("data/unreachable.json", r#"{"scenarios_csv": "scenarios.csv", "benchmark_csv": "high.csv", "n": 1, "a": 0, "b": 1}"#),
        ("data/broken.json", r#"{"scenarios_csv": "scenarios.csv", "n": 1}"#),
    ];
    fs::create_dir(dir.path().join("data")).unwrap();
    for (name, body) in files {
        fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

#[test]
fn lpm_values_and_errors() {
    let dir = workspace();
    let out = bsd_lab(&["lpm", "coin.csv", "--n", "2", "--c", "1.0"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["lpm"], 0.5);

    let out = bsd_lab(&["lpm", "coin.csv", "--n", "2", "--c", "-1"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "{\n  \"lpm\": 0.0\n}");

    let out = bsd_lab(&["lpm", "coin.csv", "--n", "1", "--curve"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(json(&out)["breakpoints"].is_array());

    assert_eq!(code(&bsd_lab(&["lpm", "missing.csv", "--n", "2", "--c", "1"], dir.path())), 2);
    assert_eq!(code(&bsd_lab(&["lpm", "counterexample.json", "--n", "2", "--c", "1"], dir.path())), 2);
}

#[test]
fn dominance_checks() {
    let dir = workspace();
    let args = |f, g| vec!["check", f, g, "--order", "bsd", "--exponent", "2", "--a", "0", "--b", "1"];
    let out = bsd_lab(&args("risky.csv", "sure.csv"), dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["min_margin"], 0.0);

    let out = bsd_lab(&args("sure.csv", "risky.csv"), dir.path());
    assert_eq!(code(&out), 1);
    let witness = json(&out)["witness_c"].as_f64().unwrap();
    assert!((witness - 2.0 / 3.0).abs() < 1e-9);

    let out = bsd_lab(
        &["check", "sure.csv", "risky.csv", "--order", "at", "--exponent", "1", "--c", "1.0", "--a", "0", "--b", "1"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert!((json(&out)["min_margin"].as_f64().unwrap() - 0.25).abs() < 1e-15);

    let out = bsd_lab(
        &["check", "sure.csv", "risky.csv", "--exponent", "2", "--a", "0", "--b", "0.8"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn utility_membership() {
    let dir = workspace();
    let run = |file, class| bsd_lab(&["utility", file, "--class", class, "--n", "2", "--a", "0", "--b", "1"], dir.path());
    assert_eq!(code(&run("counterexample.json", "ap")), 0);
    let out = run("counterexample.json", "lp");
    assert_eq!(code(&out), 1);
    assert!(json(&out)["worst_location"].as_f64().unwrap() < 0.1);
    assert_eq!(code(&run("affine.json", "ap")), 1);
    assert_eq!(code(&run("bogus.json", "ap")), 2);
}

#[test]
fn verify_exit_codes() {
    let dir = workspace();
    let small = ["--samples", "20", "--consequence-samples", "20"];
    let mut args = vec!["verify", "--trials", "1", "--seed", "7", "--force-equal"];
    args.extend(small);
    let out = bsd_lab(&args, dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["counterexamples"], 0);

    let mut args = vec!["verify", "--trials", "2", "--seed", "7", "--corrupt-tolerance"];
    args.extend(small);
    assert_eq!(code(&bsd_lab(&args, dir.path())), 3);
}

#[test]
fn verify_writes_reports_and_is_repeatable() {
    let dir = workspace();
    let run = |report: &str| {
        bsd_lab(
            &["verify", "--trials", "5", "--n-set", "1,2", "--samples", "30", "--consequence-samples", "30", "--report", report],
            dir.path(),
        )
    };
    let first = run("a.jsonl");
    let second = run("b.jsonl");
    assert_eq!(code(&first), 0);
    let a = fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.jsonl")).unwrap());
    // 10 trial lines plus one summary line per sweep
    assert_eq!(a.lines().count(), 12);
    for line in a.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
    let strip = |o: &Output| String::from_utf8_lossy(&o.stdout).replace("a.jsonl", "").replace("b.jsonl", "");
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn portfolio_problems() {
    let dir = workspace();
    let out = bsd_lab(&["portfolio", "data/dominated.json", "--weights-csv", "w.csv"], dir.path());
    assert_eq!(code(&out), 0);
    let s = json(&out);
    assert!((s["weights"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(s["max_violation"].as_f64().unwrap() <= 1e-9);
    let csv = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert!(csv.starts_with("asset,weight\nhi,"));

    let out = bsd_lab(&["portfolio", "data/single.json"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["weights"], serde_json::json!([1.0]));

    let out = bsd_lab(&["portfolio", "data/unreachable.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["status"], "infeasible");

    assert_eq!(code(&bsd_lab(&["portfolio", "data/broken.json"], dir.path())), 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = workspace();
    assert_eq!(code(&bsd_lab(&["check", "coin.csv"], dir.path())), 2);
    assert_eq!(code(&bsd_lab(&["nonsense"], dir.path())), 2);
}
