//! Exercises the `simulate` binary: flags, exit codes, and the transcript
//! file it writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn asset(kind: &str, name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(kind).join(name)
}

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn passing_scenario_exits_zero_and_prints_verdicts() {
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        asset("scenarios", "door_intrusion.scn").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS expect call +2347048850497 by 25000"));
    assert!(stdout.contains("4/4 expectations passed"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn failing_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("never.scn");
    std::fs::write(&scenario, "expect call +1 by 1000\n").unwrap();
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        scenario.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL expect call +1 by 1000"));
}

#[test]
fn quiet_mode_prints_nothing_but_keeps_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("never.scn");
    std::fs::write(&scenario, "expect call +1 by 1000\n").unwrap();
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        scenario.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn input_errors_exit_two() {
    // Unparseable scenario.
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.scn");
    std::fs::write(&scenario, "at 20000 door ajar\n").unwrap();
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        scenario.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 1"), "{stderr}");
    assert!(stderr.contains("ajar"), "{stderr}");

    // Missing file.
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        "/nonexistent.scn",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Horizon shorter than the script.
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        asset("scenarios", "door_intrusion.scn").to_str().unwrap(),
        "--horizon",
        "10000",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transcript_flag_writes_ordered_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    let out = simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        asset("scenarios", "door_intrusion.scn").to_str().unwrap(),
        "--transcript",
        path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let text = std::fs::read_to_string(&path).unwrap();
    let mut last_t = 0u64;
    for line in text.lines() {
        // Fixed key order in every record.
        assert!(line.starts_with("{\"t_ms\":"), "{line}");
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        let t = value["t_ms"].as_u64().unwrap();
        assert!(t >= last_t, "records out of order");
        last_t = t;
    }
    assert!(text.contains("\"kind\":\"uart_write\""));
    assert!(text.contains("ATD+2347048850497;\\r\\n"));

    // Same invocation again: byte-identical file.
    let rerun = dir.path().join("rerun.jsonl");
    simulate(&[
        "--config",
        asset("configs", "default.conf").to_str().unwrap(),
        "--scenario",
        asset("scenarios", "door_intrusion.scn").to_str().unwrap(),
        "--transcript",
        rerun.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(text, std::fs::read_to_string(&rerun).unwrap());
}
