use std::fs;
use std::process::{Command, Output};

fn entswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entswap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    entswap(args).status.code().expect("exit code")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["simulate", "--help"]), 0);
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["simulate", "--attack", "nope"]), 1);
    assert_eq!(code(&["simulate", "--d", "1", "--rounds", "10"]), 1);
    assert_eq!(code(&["simulate", "--parties", "2", "--rounds", "10"]), 1);
    assert_eq!(
        code(&[
            "simulate",
            "--attack",
            "one-party",
            "--target",
            "5",
            "--rounds",
            "10"
        ]),
        1
    );
    assert_eq!(
        code(&[
            "simulate",
            "--engine",
            "oracle",
            "--attack",
            "two-party",
            "--rounds",
            "10"
        ]),
        1
    );
    assert_eq!(
        code(&["simulate", "--test-fraction", "1.5", "--rounds", "10"]),
        1
    );
    assert_eq!(code(&["bounds", "--d", "5..2"]), 1);
    assert_eq!(code(&["verify-identities", "--identity", "bell-triangle"]), 1);
}

#[test]
fn verify_identities_passes_and_negative_control_fails() {
    let out = entswap(&["verify-identities", "--d", "2..3", "--format", "json"]);
    assert!(out.status.success());
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 12);
    assert_eq!(
        code(&[
            "verify-identities",
            "--d",
            "2",
            "--identity",
            "bell-bell",
            "--corrupt-phase"
        ]),
        2
    );
}

#[test]
fn simulate_writes_report_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let records = dir.path().join("rounds.jsonl");
    let out = entswap(&[
        "simulate",
        "--protocol",
        "original",
        "--attack",
        "zlg",
        "--rounds",
        "200",
        "--output",
        report.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["detections"], 0);
    assert_eq!(json["eve_accuracy"], 1.0);
    assert!(json["bound"].is_null());
    let lines = fs::read_to_string(&records).unwrap();
    assert_eq!(lines.lines().count(), 200);
    for line in lines.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["verdict"], "consistent");
        assert_eq!(rec["adversary"]["name"], "zlg");
    }
}

#[test]
fn csv_output_has_header_and_one_row() {
    let out = entswap(&["simulate", "--rounds", "100", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[1].starts_with("2,3,modified,none,"));
}

#[test]
fn check_bound_passes_with_exact_enumeration() {
    let args = [
        "simulate",
        "--attack",
        "zlg",
        "--rounds",
        "2000",
        "--exact",
        "--check-bound",
    ];
    let out = entswap(&args);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["bound"]["exact"], "7/16");
    assert!((json["exact_rate"].as_f64().unwrap() - 0.4375).abs() < 1e-12);
    assert_eq!(json["bound_satisfied"], true);
}

#[test]
fn exact_enumeration_respects_the_leaf_cap() {
    assert_eq!(
        code(&[
            "simulate",
            "--attack",
            "two-party",
            "--rounds",
            "10",
            "--exact",
            "--leaf-cap",
            "50"
        ]),
        1
    );
}

#[test]
fn bounds_formats() {
    let out = entswap(&["bounds", "--d", "2,3", "--parties", "3", "--format", "json"]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows[0]["zlg"]["exact"], "7/16");
    assert_eq!(rows[1]["two_party"]["exact"], "43/54");
    let csv = String::from_utf8(entswap(&["bounds", "--format", "csv"]).stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let table = String::from_utf8(entswap(&["bounds"]).stdout).unwrap();
    assert!(table.contains("21/32"));
}
