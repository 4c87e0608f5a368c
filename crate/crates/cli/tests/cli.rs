use std::path::Path;
use std::process::{Command, Output};

use qcc_core::channel::TrialSummary;
use qcc_core::{ClassicalReport, KlReport, Manifest, Verdict};

fn qcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcc"))
        .args(args)
        .env_remove("QCC_REPORT_DIR")
        .output()
        .expect("qcc runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn kl_report(out: &Output) -> KlReport {
    let report: KlReport = serde_json::from_slice(&out.stdout).expect("KL report re-parses");
    assert_eq!(report.schema_version, 1);
    assert_eq!(
        code(out),
        if report.verdict.passed() { 0 } else { 1 },
        "exit code follows the verdict"
    );
    report
}

#[test]
fn construct_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("code.json");
    let out = qcc(&[
        "construct",
        "--code",
        "rate14_conv",
        "--n-levels",
        "2",
        "--logical-len",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["schema_version"], 1);
    let manifest: Manifest = serde_json::from_value(json).unwrap();
    assert_eq!(manifest.width, 24);
    assert_eq!(manifest.rate, 0.25);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate14_conv"));
}

#[test]
fn report_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qcc"))
        .args([
            "construct",
            "--code",
            "pipeline(majority3)",
            "--out",
            "nested/shor.json",
        ])
        .env("QCC_REPORT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let written = dir.path().join(Path::new("nested/shor.json"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(written).unwrap()).unwrap();
    assert_eq!(json["width"], 9);
}

#[test]
fn dualize_and_paste() {
    let out = qcc(&["dualize", "--code", "majority3", "--kets"]);
    assert_eq!(code(&out), 0);
    let json = stdout_json(&out);
    assert_eq!(json["label"], "majority3-dual");
    assert_eq!(json["kets"][1]["terms"].as_array().unwrap().len(), 8);

    let out = qcc(&[
        "paste",
        "--first",
        "dual(majority3)",
        "--second",
        "majority3",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["width"], 9);
}

#[test]
fn shor_passes() {
    let out = qcc(&[
        "verify-kl",
        "--code",
        "shor9",
        "--n-levels",
        "2",
        "--window",
        "9",
        "--max-errors",
        "1",
    ]);
    let r = kl_report(&out);
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.family.size, 28);
    assert!(r.exhaustive);
}

#[test]
fn rate14_one_per_four_fails_with_witness() {
    let out = qcc(&[
        "verify-kl",
        "--code",
        "rate14_conv",
        "--logical-len",
        "3",
        "--window",
        "4",
        "--max-errors",
        "1",
    ]);
    let r = kl_report(&out);
    assert_eq!(code(&out), 1);
    assert!(r.witness.is_some());
    assert!(!r.exhaustive);
}

#[test]
fn rate14_one_per_eight_interior_exit_code() {
    let out = qcc(&[
        "verify-kl",
        "--code",
        "rate14_conv",
        "--logical-len",
        "3",
        "--window",
        "8",
        "--interior",
        "--fail-fast",
    ]);
    let r = kl_report(&out);
    assert_eq!(r.family.size, 373);
    assert_eq!(r.family.support, (5, 20));
}

#[test]
fn perfect5_passes() {
    let out = qcc(&[
        "verify-kl",
        "--code",
        "perfect5",
        "--logical-len",
        "2",
        "--window",
        "5",
    ]);
    assert_eq!(kl_report(&out).verdict, Verdict::Pass);
}

#[test]
fn reversed_paste_fails() {
    let out = qcc(&[
        "verify-kl",
        "--code",
        "paste(spin_conv,dual(spin_conv))",
        "--window",
        "8",
        "--fail-fast",
    ]);
    let r = kl_report(&out);
    assert_eq!(code(&out), 1);
    assert!(r.witness.is_some());
}

#[test]
fn float_mode_is_reported() {
    let out = qcc(&[
        "verify-kl",
        "--code",
        "majority3",
        "--basis",
        "additive",
        "--exact",
        "false",
    ]);
    let r = kl_report(&out);
    assert!(!r.exact);
    assert!(r.verdict.passed());
}

#[test]
fn lambda_matrix_and_failure() {
    let out = qcc(&["lambda", "--code", "shor9"]);
    assert_eq!(code(&out), 0);
    let json = stdout_json(&out);
    assert_eq!(json["family_size"], 28);
    assert_eq!(json["matrix"].as_array().unwrap().len(), 28);
    assert_eq!(json["summary"]["kind"], "degenerate");

    let out = qcc(&["lambda", "--code", "identity", "--logical-len", "2"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["verdict"], "fail");
}

#[test]
fn classical_certificates() {
    let out = qcc(&["certify-classical", "--n-levels", "2", "--max-len", "4"]);
    assert_eq!(code(&out), 0);
    let out = qcc(&[
        "certify-classical",
        "--n-levels",
        "2",
        "--max-len",
        "6",
        "--max-errors",
        "2",
    ]);
    assert_eq!(code(&out), 1);
    let r: ClassicalReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.counterexample.is_some());
    let out = qcc(&["certify-classical", "--n-levels", "2", "--max-len", "6"]);
    let r: ClassicalReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(code(&out), if r.verdict.passed() { 0 } else { 1 });
}

#[test]
fn simulate_is_reproducible_across_jobs() {
    let args = |jobs: &'static str| {
        [
            "simulate",
            "--code",
            "perfect5_block",
            "--p",
            "0.05",
            "--trials",
            "300",
            "--seed",
            "5",
            "--jobs",
            jobs,
        ]
    };
    let one = qcc(&args("1"));
    let two = qcc(&args("2"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, two.stdout);
    let s: TrialSummary = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(s.trials, 300);
    assert_eq!(s.conditional_success, 1.0);
}

#[test]
fn simulate_custom_input() {
    let out = qcc(&[
        "simulate",
        "--code",
        "shor9",
        "--logical-len",
        "2",
        "--p",
        "0.0",
        "--trials",
        "5",
        "--seed",
        "1",
        "--input",
        "01,10",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["success"], 5);
}

#[test]
fn usage_and_config_errors() {
    for args in [
        vec!["bogus"],
        vec!["verify-kl", "--code", "shor9", "--no-such-flag"],
        vec!["simulate", "--code", "shor9", "--p", "0.1"],
        vec!["construct", "--code", "no_such_code"],
        vec!["verify-kl", "--code", "shor9", "--support", "3-5"],
        vec!["verify-kl", "--code", "shor9", "--window", "12"],
        vec![
            "simulate", "--code", "shor9", "--p", "0.1", "--seed", "1", "--input", "2",
        ],
        vec!["certify-classical", "--max-len", "9"],
        vec!["construct", "--code", "shor9", "--jobs", "0"],
    ] {
        let out = qcc(&args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    let out = qcc(&["bogus"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}
