use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tracelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracelab"))
        .args(args)
        .env_remove("TRACE_LAB_FIXTURE_DIR")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(tracelab(&["--help"]).status.code(), Some(0));
    assert_eq!(tracelab(&["--version"]).status.code(), Some(0));
    let help = String::from_utf8(tracelab(&["--help"]).stdout).unwrap();
    for sub in ["arith-check", "petersson", "voronoi-geometric", "continue-l", "fe-check", "isolate", "fixtures-validate"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(tracelab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(tracelab(&["petersson", "--fixture", "missing.json"]).status.code(), Some(2));
    // Index 1 mod 5 is odd; weight 6 needs an even character.
    let out = tracelab(&["continue-l", "-k", "6", "-D", "5", "--char-index", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parity"));
}

#[test]
fn petersson_json_is_deterministic() {
    let args = ["petersson", "--fixture", "delta.json", "--mmax", "4", "--nmax", "4", "--format", "json"];
    let a = tracelab(&args);
    let b = tracelab(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "repeated runs differ");
    let report = json(&a);
    assert_eq!(report["command"], "petersson");
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 16);
    for c in checks {
        assert!(c["residual"].as_f64().unwrap() <= c["budget"].as_f64().unwrap());
    }
    // The thread count does not change the numbers.
    let mut single = args.to_vec();
    single.extend(["--threads", "1"]);
    assert_eq!(tracelab(&single).stdout, a.stdout);
}

#[test]
fn fixture_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/delta.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(src).unwrap()).unwrap();
    doc["label"] = Value::from("custom");
    std::fs::write(dir.path().join("custom.json"), doc.to_string()).unwrap();
    let run = |env: Option<&Path>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tracelab"));
        cmd.args(["petersson", "--fixture", "custom.json", "--mmax", "2", "--nmax", "2", "--format", "json"]);
        match env {
            Some(p) => cmd.env("TRACE_LAB_FIXTURE_DIR", p),
            None => cmd.env_remove("TRACE_LAB_FIXTURE_DIR"),
        };
        cmd.output().unwrap()
    };
    assert_eq!(run(None).status.code(), Some(2));
    let out = run(Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn corrupt_fixture_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"label": "bad", "weight": 12}"#).unwrap();
    let out = tracelab(&["petersson", "--fixture", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixtures_validate_passes_on_shipped_data() {
    let out = tracelab(&["fixtures-validate", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn table_output_is_human_readable() {
    let out = tracelab(&["petersson", "--fixture", "delta.json", "--mmax", "2", "--nmax", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS"), "{text}");
}
