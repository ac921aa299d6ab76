//! End-to-end tests of the `qms` binary: exit codes, report shape,
//! determinism, and schema agreement.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qms() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qms"))
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("qms-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn shift_instance(n: usize, s_values: &str) -> String {
    let mut data = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = if i == (j + 1) % n { 1.0 } else { 0.0 };
            data.push(format!("[{v}, 0.0]"));
        }
    }
    format!(
        r#"{{"id": "shift-{n}", "dim": {n},
            "lindblad_ops": [{{"rows": {n}, "cols": {n}, "data": [{}]}}],
            "s_values": [{s_values}]}}"#,
        data.join(",")
    )
}

fn run_ok(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn analyze_shift_reports_dual_qms_without_balance() {
    let path = write_temp("shift3.json", &shift_instance(3, "0.0, 0.5"));
    let out = qms().arg("analyze").arg(&path).output().unwrap();
    let report = run_ok(&out);
    assert_eq!(report["dim"], 3);
    assert_eq!(report["modular_commutation"]["commutes"], true);
    assert_eq!(report["duals"][0]["is_qms"], true);
    assert_eq!(report["balance"][0]["holds"], false);
    // symmetric dual is always a QMS
    assert_eq!(report["duals"][1]["is_qms"], true);
    // trace state found as the center
    assert_eq!(report["stationary"]["kernel_dim"], 3);
}

#[test]
fn analyze_is_byte_deterministic() {
    let path = write_temp("shift4.json", &shift_instance(4, "0.0"));
    let a = qms().arg("analyze").arg(&path).output().unwrap();
    let b = qms().arg("analyze").arg(&path).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout, "reports must be byte-identical");
    // floats carry 17 significant digits
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("e0") || text.contains("e-"), "scientific floats");
}

#[test]
fn qubit_build_analyze_roundtrip() {
    let inst = qms()
        .args([
            "qubit-build",
            "--nu",
            "0.25",
            "--mu-abs",
            "1.1",
            "--eta-abs",
            "0.7",
            "--v3",
            "0.3",
        ])
        .output()
        .unwrap();
    let instance = run_ok(&inst);
    assert_eq!(instance["dim"], 2);
    let path = write_temp("family.json", &serde_json::to_string(&instance).unwrap());
    let out = qms().arg("analyze").arg(&path).output().unwrap();
    let report = run_ok(&out);
    assert_eq!(report["modular_commutation"]["commutes"], true);
    assert_eq!(report["balance"][0]["holds"], true);
    assert!(report["balance"][0]["k"].is_object());
    let lambdas = report["privileged"]["lambdas"].as_array().unwrap();
    assert_eq!(lambdas.len(), 3);
}

#[test]
fn exit_codes() {
    // parse error -> 1
    let path = write_temp("broken.json", "{nope");
    let out = qms().arg("analyze").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // both representation forms present -> 1
    let bad = r#"{"dim": 2,
        "lindblad_ops": [{"rows":2,"cols":2,"data":[[0,0],[0,0],[1,0],[0,0]]}],
        "superoperator": {"rows":4,"cols":4,"data":[[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]}}"#;
    let path = write_temp("both.json", bad);
    let out = qms().arg("analyze").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // non-invariant supplied state -> 2
    let noninv = r#"{"dim": 2,
        "hamiltonian": {"rows":2,"cols":2,"data":[[0,0],[0.5,0],[0.5,0],[0,0]]},
        "lindblad_ops": [{"rows":2,"cols":2,"data":[[0,0],[0,0],[1,0],[0,0]]}],
        "rho": {"rows":2,"cols":2,"data":[[0.5,0],[0,0],[0,0],[0.5,0]]}}"#;
    let path = write_temp("noninv.json", noninv);
    let out = qms().arg("analyze").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // bad s list -> 1
    let path = write_temp("shift5.json", &shift_instance(3, "0.0"));
    let out = qms()
        .args(["--s", "1.5", "analyze"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn classical_subcommand() {
    let chain = r#"{"q": [[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]],
                    "pi": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]}"#;
    let path = write_temp("cycle.json", chain);
    let out = qms().arg("classical").arg(&path).output().unwrap();
    let report = run_ok(&out);
    assert_eq!(report["reversible"], false);
    let v = report["max_violation"].as_f64().unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-12);

    let rev = r#"{"q": [[-1.0, 1.0], [2.0, -2.0]], "pi": [0.6666666666666666, 0.3333333333333334]}"#;
    let path = write_temp("rev.json", rev);
    let out = qms().arg("classical").arg(&path).output().unwrap();
    let report = run_ok(&out);
    assert_eq!(report["reversible"], true);
}

#[test]
fn examples_single_selection() {
    let out = qms()
        .args(["examples", "--only", "shift-n2"])
        .output()
        .unwrap();
    let report = run_ok(&out);
    assert_eq!(report["total"], 1);
    assert_eq!(report["failed"], 0);
}

#[test]
fn report_matches_schema_requirements() {
    // structural check against the shipped schema: all required fields
    // present, no extras beyond the schema's properties
    let schema: serde_json::Value = serde_json::from_str(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../schemas/report.schema.json"
    )))
    .unwrap();
    let path = write_temp("shift6.json", &shift_instance(3, "0.0, 0.5"));
    let out = qms().arg("analyze").arg(&path).output().unwrap();
    let report = run_ok(&out);

    let required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for field in &required {
        assert!(report.get(field).is_some(), "missing required field {field}");
    }
    let allowed: Vec<&str> = schema["properties"]
        .as_object()
        .unwrap()
        .keys()
        .map(|s| s.as_str())
        .collect();
    for key in report.as_object().unwrap().keys() {
        assert!(allowed.contains(&key.as_str()), "unexpected field {key}");
    }

    // instance schema agrees with what qubit-build emits
    let ischema: serde_json::Value = serde_json::from_str(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../schemas/instance.schema.json"
    )))
    .unwrap();
    let inst = qms()
        .args(["qubit-build", "--nu", "0.3"])
        .output()
        .unwrap();
    let instance = run_ok(&inst);
    let allowed: Vec<&str> = ischema["properties"]
        .as_object()
        .unwrap()
        .keys()
        .map(|s| s.as_str())
        .collect();
    for key in instance.as_object().unwrap().keys() {
        assert!(allowed.contains(&key.as_str()), "unexpected field {key}");
    }
}
