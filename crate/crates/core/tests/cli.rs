use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const EX1: &str = "c (x ∨ ¬y) ∧ (¬x ∨ z)\np cnf 3 2\n1 -2 0\n-1 3 0\n";

fn qsatlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsatlab"))
        .args(args)
        .env_remove("QSATLAB_MAX_N")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn example1_reports_match() {
    let o = qsatlab(&["example1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("residuals (0, 1)"));
    assert_eq!(s.matches(" match").count(), 6);

    let o = qsatlab(&["example1", "--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["all_match"], true);
    assert_eq!(v["projectors"][0]["dim"], 8);
}

#[test]
fn check_example1_literal_is_unsatisfiable() {
    let dir = tempfile::tempdir().unwrap();
    let ex1 = write(dir.path(), "ex1.cnf", EX1);
    let o = qsatlab(&["check", &ex1, "--eval", "101", "--mode", "literal"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["satisfiable"], false);
    assert_eq!(v["lambda_min"], 1.0);
    assert_eq!(v["witness"], Value::Null);

    // Without --eval: one verdict per satisfying evaluation.
    let o = qsatlab(&["check", &ex1, "--mode", "aligned"]);
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|v| v["satisfiable"] == true));
}

#[test]
fn sat_on_contradiction_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "contradiction.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let o = qsatlab(&["sat", &p]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let o = qsatlab(&["sat", &p, "--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["satisfying"], Value::Array(vec![]));
}

#[test]
fn parse_and_build() {
    let dir = tempfile::tempdir().unwrap();
    let ex1 = write(dir.path(), "ex1.cnf", EX1);
    let o = qsatlab(&["parse", &ex1]);
    assert!(stdout(&o).contains("c dimension (2, 3)"));

    let o = qsatlab(&["build", &ex1, "--eval", "101", "--clause", "1"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let diag: Vec<i64> = (0..8)
        .map(|i| v[0]["matrix"]["entries"][i * 8 + i][0].as_i64().unwrap())
        .collect();
    assert_eq!(diag, vec![1, 1, 1, 1, 0, 0, 1, 1]);
}

#[test]
fn input_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let ex1 = write(dir.path(), "ex1.cnf", EX1);
    let bad = write(dir.path(), "bad.cnf", "p cnf 2 1\n1 -2 3 0\n");
    for args in [
        vec!["check", ex1.as_str(), "--eval", "10"],
        vec!["check", ex1.as_str(), "--eval", "010"],
        vec!["build", ex1.as_str(), "--eval", "101", "--scale", "0,0"],
        vec!["sat", bad.as_str()],
        vec!["frobnicate"],
    ] {
        let o = qsatlab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_qsatlab"))
        .args(["sat", &ex1])
        .env("QSATLAB_MAX_N", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn prop_strict_flags_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let units = write(dir.path(), "units.cnf", "p cnf 2 2\n1 0\n2 0\n");
    let o = qsatlab(&["prop", &units, "--pair", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["proposition_holds"], false);
    assert_eq!(qsatlab(&["prop", &units, "--strict"]).status.code(), Some(1));
    let ex1 = write(dir.path(), "ex1.cnf", EX1);
    assert_eq!(qsatlab(&["prop", &ex1, "--strict"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = qsatlab(&[
            "sweep", "-k", "2", "-n", "4", "-m", "3", "--count", "50", "--seed", "3", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(fs::read(a.join("sweep.json")).unwrap(), fs::read(b.join("sweep.json")).unwrap());

    // Out-of-bounds configs fail before anything is written.
    let c = dir.path().join("c");
    let o = qsatlab(&["sweep", "-k", "2", "-n", "5", "-m", "1", "--out", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!c.exists());
}
