use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use treeclock::fixtures;
use treeclock::tracegen::{random_trace, RandomSpec};

fn tclock(args: &[&str], extra: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tclock"))
        .args(args)
        .args(extra)
        .output()
        .expect("spawn tclock")
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        let o = tclock(&["gen", "--pattern", "pairwise", "--threads", "6", "--events", "2000", "--seed", "9", "--out"], &[p]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let stdout = tclock(&["gen", "--pattern", "pairwise", "--threads", "6", "--events", "2000", "--seed", "9"], &[]);
    assert_eq!(stdout.stdout, fs::read(&a).unwrap());
}

#[test]
fn analyze_with_oracle_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.txt");
    let t = random_trace(&RandomSpec { threads: 4, locks: 2, vars: 3, events: 200, seed: 5 });
    fs::write(&p, treeclock::serialize_trace(&t)).unwrap();
    let o = tclock(&["analyze", "--po", "hb,shb,maz", "--clock", "both", "--oracle", "--races", "--repeat", "1", "--input"], &[&p]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}");
    assert_eq!(out.matches("oracle agrees").count(), 6, "{out}");
    assert_eq!(out.matches("vector and tree clocks agree").count(), 3, "{out}");
}

#[test]
fn csv_gets_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("locked.txt");
    let csv = dir.path().join("out.csv");
    fs::write(&p, fixtures::LOCKED).unwrap();
    for _ in 0..2 {
        let o = tclock(&["analyze", "--po", "shb", "--clock", "tree", "--repeat", "1", "--input"], &[&p]);
        assert!(o.status.success());
        let o = Command::new(env!("CARGO_BIN_EXE_tclock"))
            .args(["analyze", "--po", "shb", "--clock", "tree", "--repeat", "1", "--input"])
            .arg(&p)
            .arg("--csv")
            .arg(&csv)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("trace,po,clock"));
    assert!(lines[1].starts_with("locked,shb,tree,12,3,1,2,"));
}

#[test]
fn bad_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    fs::write(&p, "t1 frobnicate x\n").unwrap();
    assert_eq!(tclock(&["analyze", "--input"], &[&p]).status.code(), Some(2));
    assert_eq!(tclock(&["analyze", "--input"], &[&dir.path().join("missing")]).status.code(), Some(2));
    assert_eq!(tclock(&["nonsense"], &[]).status.code(), Some(2));
}

#[test]
fn selfcheck_passes() {
    let o = tclock(&["selfcheck", "--traces", "20", "--seed", "3"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}
