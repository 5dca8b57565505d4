//! CLI behavior: exit codes, schema validation, report emission and the
//! scenario/report round trip through the binary.

use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_medwit"))
}

#[test]
fn demo_exits_zero_for_any_verdict() {
    for name in ["cnot-relay", "bmv-phase", "nonlocal-cz"] {
        let out = bin().args(["demo", name, "--quiet"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "demo {name}");
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["version"], 1);
        assert_eq!(report["scenario"]["demo"], name);
    }
}

#[test]
fn malformed_json_exits_2_without_report() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("bad.json");
    std::fs::write(&scenario, "{oops").unwrap();
    let report_path = dir.path().join("report.json");
    let out = bin()
        .args([
            "run",
            scenario.to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!report_path.exists(), "no report on validation failure");
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_demo_exits_2() {
    let out = bin().args(["demo", "warp-drive"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wrong_version_exits_2_with_pointer() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("v2.json");
    std::fs::write(&scenario, r#"{"version": 2, "demo": "cnot-relay"}"#).unwrap();
    let out = bin()
        .args(["run", scenario.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/version"));
}

#[test]
fn protocol_scenario_file_runs() {
    let dir = TempDir::new().unwrap();
    let spec = medwit::mediators::build_cnot_relay();
    let scenario = medwit::scenario::ScenarioFile::for_protocol(spec);
    let path = dir.path().join("relay.json");
    std::fs::write(&path, serde_json::to_string_pretty(&scenario).unwrap()).unwrap();
    let out = bin()
        .args(["run", path.to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        report["result"]["report"]["final_verdict"],
        "witness_fires_nonclassical"
    );
}

#[test]
fn report_protocol_echo_reruns_to_same_verdict() {
    // take the protocol out of a demo report, wrap it as a scenario, run it
    let out = bin().args(["demo", "bmv-phase", "--quiet"]).output().unwrap();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let protocol = report["result"]["protocol"].clone();
    let scenario = serde_json::json!({"version": 1, "protocol": protocol});
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("echo.json");
    std::fs::write(&path, serde_json::to_string(&scenario).unwrap()).unwrap();
    let out2 = bin()
        .args(["run", path.to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(0));
    let report2: serde_json::Value = serde_json::from_slice(&out2.stdout).unwrap();
    assert_eq!(
        report["result"]["report"]["final_verdict"],
        report2["result"]["report"]["final_verdict"]
    );
    assert_eq!(
        report["result"]["report"]["negativity_ab"],
        report2["result"]["report"]["negativity_ab"]
    );
}

#[test]
fn classify_subcommand_works_and_rejects_other_payloads() {
    let dir = TempDir::new().unwrap();
    let variables = serde_json::json!({
        "version": 1,
        "variables": [
            {"dim": 2, "attributes": [
                {"label": "z0", "vectors": [[[1.0, 0.0], [0.0, 0.0]]]},
                {"label": "z1", "vectors": [[[0.0, 0.0], [1.0, 0.0]]]}
            ]},
            {"dim": 2, "attributes": [
                {"label": "x0", "vectors": [[[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]]]},
                {"label": "x1", "vectors": [[[0.7071067811865476, 0.0], [-0.7071067811865476, 0.0]]]}
            ]}
        ]
    });
    let path = dir.path().join("vars.json");
    std::fs::write(&path, serde_json::to_string(&variables).unwrap()).unwrap();
    let out = bin()
        .args(["classify", path.to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["result"]["non_classical"], true);

    let demo_path = dir.path().join("demo.json");
    std::fs::write(&demo_path, r#"{"version": 1, "demo": "cnot-relay"}"#).unwrap();
    let out = bin()
        .args(["classify", demo_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quiet_suppresses_summary() {
    let loud = bin().args(["demo", "cnot-relay"]).output().unwrap();
    assert!(!loud.stderr.is_empty());
    let quiet = bin().args(["demo", "cnot-relay", "--quiet"]).output().unwrap();
    assert!(quiet.stderr.is_empty());
}

#[test]
fn sweep_rejects_zero_samples() {
    let out = bin()
        .args([
            "sweep", "--family", "classical_local", "--samples", "0", "--seed", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rejects_non_finite_threshold() {
    let out = bin()
        .args([
            "sweep", "--family", "classical_local", "--samples", "5", "--seed", "1",
            "--tol", "NaN",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negativity_threshold"));
}

#[test]
fn sweep_rejects_unknown_family() {
    let out = bin()
        .args([
            "sweep", "--family", "telepathic", "--samples", "1", "--seed", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
