//! End-to-end tests of the command-line surface: CSV conventions, exit
//! codes, JSON schema conformance, and seed-driven determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nmar_gof::rng::{child_rng, STREAM_SIMULATION};
use nmar_gof::sim::{draw_joint, scenario, Scenario};
use nmar_gof::{bootstrap_test, OutcomeFamily};
use nmar_gof_cli::config::{Method, RunConfig};
use nmar_gof_cli::csv_io::{load_csv, write_csv};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nmar-gof"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn cfg_for(path: &Path, fam: OutcomeFamily, prop: &[&str], outc: &[&str]) -> RunConfig {
    RunConfig {
        data_path: path.to_path_buf(),
        outcome_col: "y".into(),
        propensity_cols: prop.iter().map(|s| s.to_string()).collect(),
        outcome_cols: outc.iter().map(|s| s.to_string()).collect(),
        family: fam,
        method: Method::Both,
        alpha: 0.05,
        boot_reps: 50,
        seed: 0,
        output_path: None,
    }
}

fn schema_validator() -> jsonschema::Validator {
    let raw = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/schemas/nmar-gof-report.schema.json"
    ))
    .expect("schema file ships with the crate");
    let schema: serde_json::Value = serde_json::from_str(&raw).expect("schema parses");
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(validator: &jsonschema::Validator, instance: &serde_json::Value, what: &str) {
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{what} violates the schema: {errors:?}");
}

/// Write a simulated dataset to CSV and return the run configuration that
/// reads it back.
fn sim_csv(dir: &Path, example: u8, sc: Scenario, n: usize, seed: u64, name: &str) -> RunConfig {
    let spec = scenario(example, sc).unwrap();
    let mut rng = child_rng(seed, STREAM_SIMULATION, 0);
    let data = draw_joint(&spec, n, &mut rng).unwrap();
    let path = dir.join(name);
    write_csv(&data, "y", &path).unwrap();
    cfg_for(&path, spec.outcome, &["x1", "x2"], &["x1", "x2", "x3"])
}

#[test]
fn outcome_counting_follows_the_missingness_convention() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    fs::write(&path, "x1,y\n0.1,1\n-0.4,\n1.2,NA\n0.7,0\n").unwrap();
    let cfg = cfg_for(&path, OutcomeFamily::Bernoulli, &["x1"], &["x1"]);
    let data = load_csv(&path, &cfg).unwrap();
    assert_eq!(data.n(), 4);
    assert_eq!(data.n_missing(), 2);
    assert!((data.missing_rate() - 0.5).abs() < 1e-15);
    assert_eq!(data.rows[0].y, Some(1.0));
    assert_eq!(data.rows[1].y, None);
    assert_eq!(data.rows[2].y, None);
    assert_eq!(data.rows[3].y, Some(0.0));
}

#[test]
fn a_missing_covariate_is_a_hard_error_naming_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    fs::write(&path, "x1,y\n0.1,1\n,0\n").unwrap();
    let cfg = cfg_for(&path, OutcomeFamily::Bernoulli, &["x1"], &["x1"]);
    let err = load_csv(&path, &cfg).unwrap_err().to_string();
    assert!(err.contains("covariate 'x1'"), "got: {err}");
    assert!(err.contains("row 2"), "got: {err}");
}

#[test]
fn an_unparseable_cell_is_reported_with_its_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x1,y\n0.1,1\n0.2,abc\n").unwrap();
    let cfg = cfg_for(&path, OutcomeFamily::Bernoulli, &["x1"], &["x1"]);
    let err = load_csv(&path, &cfg).unwrap_err().to_string();
    assert!(err.contains("cannot parse 'abc'"), "got: {err}");
    assert!(err.contains("row 2"), "got: {err}");
    assert!(err.contains("'y'"), "got: {err}");
}

#[test]
fn zero_bootstrap_replicates_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.csv");
    fs::write(&path, "x1,y\n0.1,1\n0.2,0\n").unwrap();
    let out = run(bin()
        .args(["test", "--data"])
        .arg(&path)
        .args(["--outcome", "y", "--family", "bernoulli"])
        .args(["--propensity-cols", "x1", "--outcome-cols", "x1"])
        .args(["--boot-reps", "0"]));
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("invalid-input"), "stderr: {}", stderr_of(&out));
}

#[test]
fn csv_round_trip_reproduces_results_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = scenario(2, Scenario::I).unwrap();
    let mut rng = child_rng(77, STREAM_SIMULATION, 0);
    let data = draw_joint(&spec, 400, &mut rng).unwrap();
    let path = dir.path().join("round.csv");
    write_csv(&data, "y", &path).unwrap();
    let cfg = cfg_for(&path, OutcomeFamily::Normal, &["x1", "x2"], &["x1", "x2", "x3"]);
    let loaded = load_csv(&path, &cfg).unwrap();

    assert_eq!(loaded.n(), data.n());
    assert_eq!(loaded.prop_cols, data.prop_cols);
    assert_eq!(loaded.out_cols, data.out_cols);
    for (a, b) in data.rows.iter().zip(loaded.rows.iter()) {
        for (u, v) in a.x.iter().zip(b.x.iter()) {
            assert_eq!(u.to_bits(), v.to_bits(), "covariate changed in transit");
        }
        match (a.y, b.y) {
            (None, None) => {}
            (Some(u), Some(v)) => assert_eq!(u.to_bits(), v.to_bits(), "outcome changed"),
            _ => panic!("missingness changed in transit"),
        }
    }

    let (gof_a, boot_a) = bootstrap_test(&data, spec.outcome, 0.05, 25, 12).unwrap();
    let (gof_b, boot_b) = bootstrap_test(&loaded, spec.outcome, 0.05, 25, 12).unwrap();
    assert_eq!(gof_a.t_n.to_bits(), gof_b.t_n.to_bits());
    assert_eq!(boot_a.boot_p.to_bits(), boot_b.boot_p.to_bits());
    assert_eq!(boot_a.q_star.to_bits(), boot_b.q_star.to_bits());
}

#[test]
fn simulate_is_deterministic_and_schema_conformant() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("study.json");
    let args = |p: &Path| {
        vec![
            "simulate".to_string(),
            "--example".into(),
            "1".into(),
            "--scenario".into(),
            "I".into(),
            "--n".into(),
            "150".into(),
            "--reps".into(),
            "4".into(),
            "--boot-reps".into(),
            "19".into(),
            "--seed".into(),
            "9".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let first = run(bin().args(args(&out_path)));
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_of(&first));
    assert!(stdout_of(&first).contains("boot_rate"));
    let bytes1 = fs::read(&out_path).unwrap();

    let second = run(bin().args(args(&out_path)));
    assert_eq!(second.status.code(), Some(0));
    let bytes2 = fs::read(&out_path).unwrap();
    assert_eq!(bytes1, bytes2, "same seed must give byte-identical study output");

    let value: serde_json::Value = serde_json::from_slice(&bytes1).unwrap();
    assert_valid(&schema_validator(), &value, "study report");
    assert_eq!(value["schema"], "nmar-gof/1");
}

#[test]
fn test_exit_codes_follow_the_bootstrap_decision() {
    let dir = tempfile::tempdir().unwrap();
    let validator = schema_validator();

    // A strong alternative: the residual statistic drifts, the bootstrap
    // rejects, and the process signals it with exit code 2.
    let alt_cfg = sim_csv(dir.path(), 1, Scenario::III, 800, 5, "alt.csv");
    let alt_out_path = dir.path().join("alt.json");
    let alt = run(bin()
        .args(["test", "--data"])
        .arg(&alt_cfg.data_path)
        .args(["--outcome", "y", "--family", "bernoulli"])
        .args(["--propensity-cols", "x1,x2", "--outcome-cols", "x1,x2,x3"])
        .args(["--method", "bootstrap", "--boot-reps", "39", "--seed", "3", "--out"])
        .arg(&alt_out_path));
    let alt_report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&alt_out_path).unwrap()).unwrap();
    assert_valid(&validator, &alt_report, "test report (alternative)");
    assert_eq!(alt_report["boot_reject"], serde_json::Value::Bool(true));
    assert_eq!(alt.status.code(), Some(2), "stderr: {}", stderr_of(&alt));

    // Null data: whatever the decision, the exit code must agree with the
    // reported bootstrap decision.
    let null_cfg = sim_csv(dir.path(), 1, Scenario::I, 300, 11, "null.csv");
    let null_out_path = dir.path().join("null.json");
    let null = run(bin()
        .args(["test", "--data"])
        .arg(&null_cfg.data_path)
        .args(["--outcome", "y", "--family", "bernoulli"])
        .args(["--propensity-cols", "x1,x2", "--outcome-cols", "x1,x2,x3"])
        .args(["--boot-reps", "39", "--seed", "3", "--out"])
        .arg(&null_out_path));
    let null_report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&null_out_path).unwrap()).unwrap();
    assert_valid(&validator, &null_report, "test report (null)");
    let rejected = null_report["boot_reject"] == serde_json::Value::Bool(true);
    assert_eq!(null.status.code(), Some(if rejected { 2 } else { 0 }));

    // Method both populates the plug-in fields alongside the bootstrap.
    assert!(null_report["t_n"].is_number());
    assert!(null_report["plugin_p"].is_number() || !null_report["warnings"].as_array().unwrap().is_empty());
    assert!(null_report["boot_p"].is_number());
}

#[test]
fn fit_reports_the_coefficient_table_without_test_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_csv(dir.path(), 1, Scenario::I, 400, 21, "fit.csv");
    let out_path = dir.path().join("fit.json");
    let out = run(bin()
        .args(["fit", "--data"])
        .arg(&cfg.data_path)
        .args(["--outcome", "y", "--family", "bernoulli"])
        .args(["--propensity-cols", "x1,x2", "--outcome-cols", "x1,x2,x3", "--out"])
        .arg(&out_path));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_valid(&schema_validator(), &report, "fit report");
    let names: Vec<&str> =
        report["fit"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        vec![
            "alpha",
            "beta.x1",
            "beta.x2",
            "gamma",
            "outcome.intercept",
            "outcome.x1",
            "outcome.x2",
            "outcome.x3"
        ]
    );
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    assert!(report["t_n"].is_null(), "fit-only runs must not report a statistic");
    assert!(report["boot_p"].is_null());
    let summary = stdout_of(&out);
    assert!(summary.contains("alpha"), "stdout: {summary}");
    assert!(summary.contains("converged = true"), "stdout: {summary}");
}

#[test]
fn reports_are_identical_across_worker_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_csv(dir.path(), 1, Scenario::I, 300, 31, "threads.csv");
    let out_path = dir.path().join("report.json");
    let mut bytes = Vec::new();
    for threads in ["1", "4"] {
        let out = run(bin()
            .args(["test", "--threads", threads, "--data"])
            .arg(&cfg.data_path)
            .args(["--outcome", "y", "--family", "bernoulli"])
            .args(["--propensity-cols", "x1,x2", "--outcome-cols", "x1,x2,x3"])
            .args(["--boot-reps", "39", "--seed", "8", "--out"])
            .arg(&out_path));
        assert!(
            matches!(out.status.code(), Some(0) | Some(2)),
            "stderr: {}",
            stderr_of(&out)
        );
        bytes.push(fs::read(&out_path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "thread count changed the report bytes");
}

#[test]
fn usage_errors_exit_one_not_two() {
    // Exit code 2 is reserved for a rejected null, so argument errors must
    // remap to 1.
    let out = run(bin().arg("test").arg("--no-such-flag"));
    assert_eq!(out.status.code(), Some(1));
    let help = run(bin().arg("--help"));
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout_of(&help).contains("test"));
}
