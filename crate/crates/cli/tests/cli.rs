//! End-to-end tests of the binary: determinism of repeated runs, exit codes,
//! registry persistence, and the certify round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqspace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seqspace-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn mt_norm_flat_four_is_two() {
    let out = run(&["mt-norm", "1:1,2:1,3:1,4:1"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["value"], "2/1");
}

#[test]
fn bad_vector_is_a_usage_error() {
    let out = run(&["mt-norm", "0:1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["mt-norm", "not-a-vector"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn conforming_infeasible_is_a_capacity_error() {
    // building a special sequence in conforming mode at small caps must fail
    // with the dedicated exit code
    let out = run(&["--mode", "conforming", "special", "--j", "1", "--length", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn certify_round_trip_and_tamper_detection() {
    let dir = temp_dir("certify");
    let out = run(&["mt-norm", "1:1,2:1,3:1,4:1"]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cert_path = dir.join("cert.json");
    std::fs::write(&cert_path, serde_json::to_string(&json["certificate"]).unwrap()).unwrap();

    let out = run(&["certify", "1:1,2:1,3:1,4:1", cert_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["verdict"], "valid");
    assert_eq!(verdict["value"], "2/1");

    // tamper: give the weighted node five children at weight index 1 (n_1 = 4)
    let mut tampered: serde_json::Value = json["certificate"].clone();
    let children = tampered["children"].as_array_mut().unwrap();
    children.push(serde_json::json!({"kind": "terminal", "sign": 1, "i": 5}));
    tampered["E"] = serde_json::json!([1, 5]);
    let bad_path = dir.join("tampered.json");
    std::fs::write(&bad_path, serde_json::to_string(&tampered).unwrap()).unwrap();
    let out = run(&["certify", "1:1,2:1,3:1,4:1", bad_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(verdict["verdict"].as_str().unwrap().starts_with("invalid"));

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn repeated_quick_selftest_is_byte_identical() {
    let a = run(&["selftest", "--quick", "--format", "json"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["selftest", "--quick", "--format", "json"]);
    assert!(b.status.success());
    assert_eq!(a.stdout, b.stdout, "selftest output changed between runs");
}

#[test]
fn registry_persists_and_exports_bit_exact() {
    let dir = temp_dir("registry");
    let registry = dir.join("sigma.tsv");
    let registry_arg = registry.to_str().unwrap();

    let out = run(&["--registry", registry_arg, "special", "--j", "1", "--length", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(registry.exists());
    let saved = std::fs::read(&registry).unwrap();

    // export prints exactly the file bytes
    let out = run(&["--registry", registry_arg, "registry", "export"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, saved);

    // a second identical run reuses the assignments (idempotent registry)
    let out = run(&["--registry", registry_arg, "registry", "inspect"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let before = json["entries"].as_array().unwrap().len();
    assert!(before >= 1);

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn witness_asserts_and_reports() {
    let out = run(&["witness", "--j", "1", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["lowerSum"], "1/1");
    assert_eq!(json["referenceRatio"], "60/1");
    assert_eq!(json["dependent"]["passed"], true);
}

#[test]
fn isometry_random_sampling() {
    let out = run(&["isometry", "--random", "5", "--seed", "7", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["checked"], 5);
}
