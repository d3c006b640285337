use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cakecut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cakecut")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn uniform_solve4_is_exact() {
    let out = cakecut(&["solve4", "--in", &fixture("uniform4.json")]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["maxEnvy"], "0/1");
    assert_eq!(v["division"], serde_json::json!(["1/4", "1/2", "3/4"]));
}

#[test]
fn generated_runs_are_reproducible() {
    for cmd in ["solve2", "solve3", "solve4", "solve4-rw"] {
        let a = cakecut(&[cmd, "--seed", "11"]);
        let b = cakecut(&[cmd, "--seed", "11"]);
        assert!(a.status.success(), "{cmd}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
        let v = json(&a);
        assert_eq!(v["seed"], 11);
        let envy: cakecut::Scalar = v["maxEnvy"].as_str().unwrap().parse().unwrap();
        assert!(envy <= "1/64".parse().unwrap(), "{cmd}: {envy}");
    }
}

#[test]
fn trace_matches_counts() {
    let dir = tempfile::tempdir().unwrap();
    let trace: PathBuf = dir.path().join("t.jsonl");
    let out = cakecut(&["solve4-rw", "--seed", "3", "--trace-queries", trace.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    let sum = |k: &str| v["queries"][k].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum::<u64>();
    let lines = std::fs::read_to_string(&trace).unwrap().lines().count() as u64;
    assert_eq!(lines, sum("value") + sum("cut"));
}

#[test]
fn oracle_agrees_on_uniform() {
    let out = cakecut(&["oracle", "--in", &fixture("uniform4.json"), "--step", "1/8"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["maxEnvy"], "0/1");
    assert_eq!(v["gridStep"], "1/8");
}

#[test]
fn errors_are_typed_json() {
    let out = cakecut(&["solve4", "--epsilon", "3/2", "--in", &fixture("uniform4.json")]);
    assert_eq!(out.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["error"], "DomainError");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"agents\": [").unwrap();
    let out = cakecut(&["solve4", "--in", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["error"], "ParseError");

    let out = cakecut(&["solve4", "--in", "/nonexistent/x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_counts_grow() {
    let out = cakecut(&["bench", "--mode", "rw", "--seed", "1", "--min-bits", "6", "--max-bits", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,valueQueries,cutQueries,wallTime"));
    let rows: Vec<Vec<&str>> = lines.clone().filter(|l| !l.starts_with('#')).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], "1/64");
    assert!(rows.iter().all(|r| r[3].is_empty()));
    let totals: Vec<u64> = rows.iter().map(|r| r[1].parse::<u64>().unwrap() + r[2].parse::<u64>().unwrap()).collect();
    assert!(totals[0] < totals[4], "{totals:?}");
    assert!(text.lines().last().unwrap().starts_with("# exponent "));
}

#[test]
fn hard_instance_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hard.json");
    let out = cakecut(&["gen-hard", "--n", "2", "--path", "1,2", "--out", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&file).unwrap(), std::fs::read_to_string(fixture("path12.json")).unwrap());

    let svg = dir.path().join("l.svg");
    let out = cakecut(&[
        "verify-hard",
        "--in",
        file.to_str().unwrap(),
        "--export-svg",
        "0,60,0,60",
        "--svg-out",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let check = |name: &str| v["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap().clone();
    assert_eq!(check("square-categories")["detail"]["scope"], "full");
    assert_eq!(check("square-categories")["detail"]["uncategorized"], 0);
    let ef = check("envy-free-divisions");
    assert_eq!(ef["status"], "pass");
    assert_eq!(ef["detail"]["outsideSolutions"], 0);
    assert!(ef["detail"]["byVertex"]["2"].as_u64().unwrap() >= 1);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn broken_promise_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let decs = dir.path().join("d.json");
    std::fs::write(&decs, r#"[{"party": 1, "edge": [2, 3]}, {"party": 2, "edge": [3, 2]}]"#).unwrap();
    let out = cakecut(&["gen-hard", "--n", "3", "--path", "1,2", "--decorations", decs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["error"], "PromiseViolation");
    assert_eq!(e["promise"], 2);
}
