use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gamehedge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn prices_canonical_instances() {
    let out = run(&["price", path(&instance("canon-1.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "V^a = 2, V^b = 7/4\n");

    let out = run(&["price", path(&instance("canon-0.json")), "--side", "seller"]);
    assert_eq!(stdout(&out), "V^a = 2\n");
}

#[test]
fn decimals_and_per_stop_values() {
    let out = run(&[
        "price",
        path(&instance("canon-1.json")),
        "--per-sigma",
        "--decimals",
        "2",
    ]);
    let text = stdout(&out);
    assert!(
        text.starts_with("V^a = 2 (2.00), V^b = 7/4 (1.75)\n"),
        "{text}"
    );
    assert!(text.contains("V^a_sigma {u,d} = 9/4 (2.25)"), "{text}");
    assert!(text.contains("V^b_tau {0} = 1 (1.00)"), "{text}");
}

#[test]
fn json_report_replaces_text() {
    let out = run(&["price", path(&instance("canon-1.json")), "--report", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ask"], "2");
    assert_eq!(v["bid"], "7/4");
}

#[test]
fn surfaces_are_dumped_by_node() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("surfaces.json");
    let out = run(&[
        "price",
        path(&instance("canon-1.json")),
        "--emit-surfaces",
        path(&file),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    for side in ["seller", "buyer"] {
        for node in ["0", "u", "d"] {
            assert!(v[side]["value"][node].is_object(), "{side} {node}");
        }
    }
}

#[test]
fn strategy_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let inst = instance("canon-1.json");
    let strat = dir.path().join("s.json");
    for side in ["seller", "buyer"] {
        let out = run(&[
            "strategy",
            path(&inst),
            "--side",
            side,
            "--out",
            path(&strat),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run(&["verify", path(&inst), path(&strat)]);
        assert_eq!(out.status.code(), Some(0), "{side}: {}", stdout(&out));
        assert!(stdout(&out).starts_with("PASS"));
    }

    // Starting a seller below the ask price is refused outright.
    let out = run(&[
        "strategy",
        path(&inst),
        "--side",
        "seller",
        "--start",
        "3/2",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));

    run(&[
        "strategy",
        path(&inst),
        "--side",
        "seller",
        "--out",
        path(&strat),
    ]);
    let mut file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&strat).unwrap()).unwrap();
    file["initial_budget"] = "1".into();
    for node in ["0", "u", "d"] {
        file["positions"][node][0] = "1".into();
    }
    std::fs::write(&strat, file.to_string()).unwrap();
    let out = run(&["verify", path(&inst), path(&strat)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout(&out).starts_with("FAIL: superhedging"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn output_is_deterministic_across_runs_and_jobs() {
    let inst = instance("canon-1.json");
    let a = run(&[
        "oracle",
        path(&inst),
        "--samples",
        "20",
        "--seed",
        "7",
        "--jobs",
        "1",
    ]);
    let b = run(&[
        "oracle",
        path(&inst),
        "--samples",
        "20",
        "--seed",
        "7",
        "--jobs",
        "4",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(
        text.contains("min over sigma = 2, V^a = 2: agree"),
        "{text}"
    );
    assert!(
        text.contains("max over tau = 7/4, V^b = 7/4: agree"),
        "{text}"
    );
}

#[test]
fn oracle_report_file_and_horizon_guard() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let inst = instance("canon-0.json");
    let out = run(&["oracle", path(&inst), "--report", path(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seller"]["rows"].as_array().unwrap().len(), 2);

    let out = run(&["oracle", path(&inst), "--max-horizon", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn risk_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inst = instance("canon-1.json");
    let strat = dir.path().join("s.json");
    run(&[
        "strategy",
        path(&inst),
        "--side",
        "seller",
        "--out",
        path(&strat),
    ]);
    let out = run(&["risk", path(&inst), path(&strat)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["risk"], "0");

    let out = run(&[
        "risk-min",
        path(&inst),
        "--side",
        "seller",
        "--budget",
        "1",
        "--grid-step",
        "1/2",
        "--grid-radius",
        "1",
        "--report",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["upper_bound"], true);
    assert!(v["candidates"].as_u64().unwrap() > 0);
}

#[test]
fn lenient_mode_downgrades_soft_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(instance("canon-1.json")).unwrap()).unwrap();
    v["Y1"]["d"] = "2".into();
    let soft = dir.path().join("soft.json");
    std::fs::write(&soft, v.to_string()).unwrap();

    let out = run(&["price", path(&soft)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["price", path(&soft), "--lenient"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    v["ask"]["u"] = "7".into();
    let crossed = dir.path().join("crossed.json");
    std::fs::write(&crossed, v.to_string()).unwrap();
    let out = run(&["price", path(&crossed), "--lenient"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(run(&["price", "no-such-file.json"]).status.code(), Some(2));
    let out = run(&[
        "risk-min",
        path(&instance("canon-1.json")),
        "--side",
        "seller",
        "--budget",
        "x",
        "--grid-step",
        "1",
        "--grid-radius",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
