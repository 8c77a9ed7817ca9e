//! The command surface: schema errors with JSON paths, exit codes through the
//! actual binary, report reproducibility across worker counts, and the
//! identity suite including the sign-flip mutation check.

use bsdiv::cli::{self, identities, Overrides};
use std::process::Command;

fn member_problem() -> String {
    r#"{
        "n": 1,
        "mode": "koszul",
        "blocks": [{"m": 1, "rows": [[ [{"coeff": [1.0, 0.0], "exp": [2]}] ]]}],
        "phi": [{"coeff": [1.0, 0.0], "exp": [3]}],
        "quadrature": {"scheme": "gauss-polar", "nodes": 96, "seed": 1},
        "residual_threshold": 1e-3
    }"#
    .to_string()
}

fn non_member_problem() -> String {
    r#"{
        "n": 1,
        "mode": "koszul",
        "blocks": [{"m": 1, "rows": [[ [{"coeff": [1.0, 0.0], "exp": [2]}] ]]}],
        "phi": [{"coeff": [1.0, 0.0], "exp": [1]}],
        "quadrature": {"scheme": "gauss-polar", "nodes": 96, "seed": 1},
        "residual_threshold": 1e-3
    }"#
    .to_string()
}

#[test]
fn member_case_exits_zero_in_process() {
    let out = cli::run_divide(&member_problem(), &Overrides::default());
    assert_eq!(out.exit_code, cli::EXIT_PASS);
    assert!(out.report_json.contains("\"verdict\": \"PASS\""));
    // the resolved config is embedded
    assert!(out.report_json.contains("\"config\""));
    assert!(out.report_json.contains("\"lambda_schedule\""));
}

#[test]
fn non_member_case_exits_two_in_process() {
    let out = cli::run_divide(&non_member_problem(), &Overrides::default());
    assert_eq!(out.exit_code, cli::EXIT_FAIL);
    assert!(out.report_json.contains("\"verdict\": \"FAIL\""));
}

#[test]
fn schema_error_reports_json_path() {
    let bad = r#"{
        "n": 1,
        "mode": "koszul",
        "blocks": [{"m": 2, "rows": [[
            [{"coeff": [1.0, 0.0], "exp": [2]}],
            [{"coeff": [1.0, 0.0], "exp": [1, 7]}]
        ]]}],
        "phi": []
    }"#;
    let out = cli::run_divide(bad, &Overrides::default());
    assert_eq!(out.exit_code, cli::EXIT_ERROR);
    assert!(
        out.report_json.contains("$.blocks[0].rows[0][1][0].exp"),
        "{}",
        out.report_json
    );
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| cli::run_divide(&member_problem(), &Overrides::default()))
    };
    let a = run_with(1);
    let b = run_with(4);
    assert_eq!(a.exit_code, b.exit_code);
    assert_eq!(a.report_json, b.report_json);
}

#[test]
fn binary_exit_code_contract() {
    let bin = env!("CARGO_BIN_EXE_bsdiv");
    let dir = std::env::temp_dir().join(format!("bsdiv-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let member = dir.join("member.json");
    std::fs::write(&member, member_problem()).unwrap();
    let report_path = dir.join("report.json");
    let status = Command::new(bin)
        .args([
            "divide",
            "--input",
            member.to_str().unwrap(),
            "--output",
            report_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("\"verdict\": \"PASS\""));

    let non_member = dir.join("non_member.json");
    std::fs::write(&non_member, non_member_problem()).unwrap();
    let status = Command::new(bin)
        .args(["divide", "--input", non_member.to_str().unwrap()])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let malformed = dir.join("malformed.json");
    std::fs::write(&malformed, r#"{"n": 1, "mode": "koszul"}"#).unwrap();
    let status = Command::new(bin)
        .args(["divide", "--input", malformed.to_str().unwrap()])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn residue_command_runs_pairs() {
    let input = r#"{
        "n": 1,
        "mode": "koszul",
        "blocks": [{"m": 1, "rows": [[ [{"coeff": [1.0, 0.0], "exp": [1]}] ]]}],
        "pairs": [
            {"k": 1, "phi": [{"coeff": [1.0, 0.0], "exp": [0]}]},
            {"k": 1, "phi": [{"coeff": [1.0, 0.0], "exp": [1]}]}
        ],
        "testform": {"profile": "bump", "scale": 0.9, "dz": [1]},
        "quadrature": {"scheme": "gauss-polar", "nodes": 128, "seed": 1}
    }"#;
    let out = cli::run_residue(input, &Overrides::default());
    assert_eq!(out.exit_code, cli::EXIT_PASS, "{}", out.report_json);
    let parsed: serde_json::Value = serde_json::from_str(&out.report_json).unwrap();
    let pairs = parsed["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    // first pair: 2 pi i within 1e-2
    let v = &pairs[0]["extrapolated"];
    let im = v[1].as_f64().unwrap();
    assert!((im - 2.0 * std::f64::consts::PI).abs() <= 1e-2 * 2.0 * std::f64::consts::PI);
    // second pair: phi = z annihilates dbar(1/z)
    let v1 = &pairs[1]["extrapolated"];
    let norm = (v1[0].as_f64().unwrap().powi(2) + v1[1].as_f64().unwrap().powi(2)).sqrt();
    assert!(norm <= 1e-3 * 2.0 * std::f64::consts::PI, "{}", norm);
}

#[test]
fn size_check_command() {
    let out = cli::run_size_check(&member_problem(), &Overrides::default());
    assert_eq!(out.exit_code, cli::EXIT_PASS);
    assert!(out.report_json.contains("\"size_condition\""));

    let out = cli::run_size_check(&non_member_problem(), &Overrides::default());
    assert_eq!(out.exit_code, cli::EXIT_FAIL);
}

#[test]
fn identity_suite_passes_and_mutation_fails() {
    let out = cli::run_identities(None);
    assert_eq!(out.exit_code, cli::EXIT_PASS);
    let parsed: serde_json::Value = serde_json::from_str(&out.report_json).unwrap();
    assert_eq!(parsed["all_pass"], serde_json::Value::Bool(true));

    let mutated = cli::run_identities(Some(identities::Mutation::DeltaFSignFlip));
    assert_eq!(mutated.exit_code, cli::EXIT_FAIL);
    let parsed: serde_json::Value = serde_json::from_str(&mutated.report_json).unwrap();
    let gamma = parsed["identities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|i| i["id"] == "gamma-normalization")
        .unwrap();
    assert_eq!(gamma["pass"], serde_json::Value::Bool(false));
}

#[test]
fn overrides_apply_to_the_resolved_config() {
    let ov = Overrides {
        nodes: Some(64),
        seed: Some(123),
        r0: Some(1.1),
        r1: Some(1.3),
        ..Default::default()
    };
    let out = cli::run_divide(&member_problem(), &ov);
    let parsed: serde_json::Value = serde_json::from_str(&out.report_json).unwrap();
    assert_eq!(parsed["config"]["quadrature"]["nodes"], serde_json::json!(64));
    assert_eq!(parsed["config"]["quadrature"]["seed"], serde_json::json!(123));
    assert_eq!(parsed["config"]["kernel"]["r0"], serde_json::json!(1.1));
}
