use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qcompile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcompile")).args(args).env("QCOMPILE_THREADS", "1").output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcompile-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_report_and_transcripts() {
    let dir = scratch("run");
    let out = qcompile(&[
        "run",
        "--protocol",
        "qot",
        "--compiled",
        "--m",
        "16",
        "--key",
        "tiny",
        "--ell",
        "1",
        "--trials",
        "5",
        "--max-transcripts",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
    let r = report(&dir);
    assert_eq!(r["trials"], 5);
    assert_eq!(r["pass"], true);
    assert_eq!(r["config"]["params"]["n"], 8);
    let transcripts: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".transcript.jsonl"))
        .collect();
    assert_eq!(transcripts.len(), 2);
    for t in transcripts {
        for line in fs::read_to_string(t).unwrap().lines() {
            let v: Value = serde_json::from_str(line).unwrap();
            assert!(v["payload_hex"].is_string() && v["round"].is_u64());
            assert!(v["sender"] == "A" || v["sender"] == "B");
        }
    }
}

#[test]
fn report_goes_to_stdout_without_out() {
    let out = qcompile(&["run", "--protocol", "qid", "--n", "16", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json_end = stdout.rfind("}\n").unwrap() + 2;
    let v: Value = serde_json::from_str(&stdout[..json_end]).unwrap();
    assert_eq!(v["config"]["protocol"], "qid");
    assert!(stdout[json_end..].contains("PASS equal passwords accepted"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qcompile(&["run", "--trials", "3"]).status.code(), Some(2));
    assert_eq!(qcompile(&["attack", "--protocol", "qot", "--name", "teleport"]).status.code(), Some(2));
    assert_eq!(qcompile(&["run", "--protocol", "qot", "--compiled", "--plain"]).status.code(), Some(2));
    assert_eq!(qcompile(&["verify-lemmas", "--lemma", "pythagoras"]).status.code(), Some(2));
    assert_eq!(qcompile(&["run", "--protocol", "qid", "--n", "15", "--w-bits", "2"]).status.code(), Some(2));
    let missing = qcompile(&["run", "--config", "/nonexistent/qcompile.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));
}

#[test]
fn strict_rejects_insecure_parameters() {
    let ok = qcompile(&["run", "--protocol", "qot", "--m", "16", "--trials", "2", "--lambda", "0.0625"]);
    assert_eq!(ok.status.code(), Some(0));
    let strict = qcompile(&["run", "--protocol", "qot", "--m", "16", "--trials", "2", "--lambda", "0.25", "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    // A tiny test fraction cannot bound the disagreement.
    let dir = scratch("fail");
    let out = qcompile(&[
        "verify-lemmas",
        "--lemma",
        "sampling",
        "--m",
        "64",
        "--alpha",
        "0.05",
        "--eps",
        "0.01",
        "--trials",
        "2000",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("FAIL sampling"));
    assert_eq!(report(&dir)["pass"], false);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = scratch("config");
    let path = dir.join("experiment.json");
    fs::write(
        &path,
        r#"{"protocol": "qot", "trials": 7, "master_seed": 5, "params": {"m": 12}, "adversary": {"name": "delayed"}}"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out =
        qcompile(&["attack", "--config", path.to_str().unwrap(), "--trials", "4", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(r["trials"], 4);
    assert_eq!(r["config"]["master_seed"], 5);
    assert_eq!(r["config"]["params"]["m"], 12);
    assert_eq!(r["details"]["attack"], "delayed");
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS both strings recovered"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = scratch("repeat-a");
    let b = scratch("repeat-b");
    for dir in [&a, &b] {
        let out = qcompile(&[
            "attack",
            "--protocol",
            "qid",
            "--name",
            "delayed",
            "--n",
            "16",
            "--trials",
            "6",
            "--seed",
            "42",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 1);
    for name in names {
        assert_eq!(fs::read_to_string(a.join(&name)).unwrap(), fs::read_to_string(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn commit_bench_small() {
    let out = qcompile(&["commit-bench", "--key", "fast", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
