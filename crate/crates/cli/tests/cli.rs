use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use freeutil_cli::{execute, parse_config, run, Cli, CliError, ExperimentConfig, Kind, RunOptions};

const MINIMAL_CONTROL: &str = r#"
kind = "control"

[control]
actions = 2
observations = 2
environment = [[0.9, 0.1], [0.1, 0.9]]
observation_reward = [[0.0, 1.0], [0.0, 1.0]]
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_args(args: &[&str]) -> (Result<i32, CliError>, String, String) {
    let cli = Cli::try_parse_from(std::iter::once("freeutil").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = execute(&cli, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn csv_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn minimal_control_config_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.toml", MINIMAL_CONTROL);
    let config = parse_config(&path, &[]).unwrap();
    assert_eq!(config.config_version, 1);
    assert_eq!(config.id, "experiment");
    assert_eq!(config.kind, Some(Kind::Control));
    let output = run(&config, &RunOptions { jobs: 1, ..Default::default() }).unwrap();
    // alpha 1, seed 0, horizon 1, uniform reference
    assert_eq!(output.rows.len(), 3);
    assert!(output.rows.iter().all(|r| r.alpha == Some(1.0) && r.seed == 0));
}

#[test]
fn unnormalized_row_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let text = MINIMAL_CONTROL.replace("[0.1, 0.9]]", "[0.1, 0.8]]");
    let path = write(dir.path(), "c.toml", &text);
    let (code, _, _) = run_args(&["solve-control", "--config", path.to_str().unwrap()]);
    let msg = code.unwrap_err().to_string();
    assert!(msg.contains("`control.environment` row 1"), "{msg}");
    assert!(msg.contains("0.9"), "{msg}");

    let gvp = r#"
kind = "gvp"
[[variable]]
name = "x"
symbols = 2
io = "output"
table = [[0.5, 0.4]]
"#;
    let path = write(dir.path(), "g.toml", gvp);
    let (code, _, _) = run_args(&["gvp", "--config", path.to_str().unwrap()]);
    let msg = code.unwrap_err().to_string();
    assert!(msg.contains("`x`") && msg.contains("row 0"), "{msg}");
}

#[test]
fn alpha_sweep_string_schedules_four_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.toml", &format!("alpha = \"0.001,0.1,1,10\"\n{MINIMAL_CONTROL}"));
    let config = parse_config(&path, &[]).unwrap();
    let output = run(&config, &RunOptions { jobs: 1, ..Default::default() }).unwrap();
    let mut alphas: Vec<f64> = output.rows.iter().filter_map(|r| r.alpha).collect();
    alphas.dedup();
    assert_eq!(alphas, vec![0.001, 0.1, 1.0, 10.0]);
}

#[test]
fn unknown_key_lists_valid_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.toml", &MINIMAL_CONTROL.replace("observations = 2", "observatons = 2"));
    let msg = parse_config(&path, &[]).unwrap_err().to_string();
    assert!(msg.contains("observatons") && msg.contains("observations") && msg.contains("environment"), "{msg}");
}

#[test]
fn control_sweep_reports_utility_divergence_and_objective() {
    let (code, out, _) = run_args(&["solve-control", "--config", configs_dir().join("control_sweep.toml").to_str().unwrap()]);
    assert_eq!(code.unwrap(), 0);
    assert!(out.starts_with("experiment_id,kind,alpha,seed,metric,value,wall_ms\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4 * 3);
    let metrics: Vec<&str> = rows[..3].iter().map(|r| r[4].as_str()).collect();
    assert_eq!(metrics, ["expected_utility", "kl_cost", "objective"]);
    for cell in rows.chunks(3) {
        let alpha: f64 = cell[0][2].parse().unwrap();
        let v: Vec<f64> = cell.iter().map(|r| r[5].parse().unwrap()).collect();
        assert!((v[0] - alpha * v[1] - v[2]).abs() < 1e-12);
    }
}

#[test]
fn bandit_bcr_reports_regret_and_truth_mass() {
    let path = configs_dir().join("bandit_bcr.toml");
    let (code, out, _) = run_args(&["bcr", "--config", path.to_str().unwrap(), "--horizon", "200", "--seed", "7"]);
    assert_eq!(code.unwrap(), 0);
    let rows = csv_rows(&out);
    let metrics: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(metrics, ["cum_regret", "posterior_truth_mass"]);
    assert!(rows.iter().all(|r| r[2].is_empty() && r[3] == "7"));
}

#[test]
fn soft_controllers_put_alpha_on_the_rows() {
    let path = configs_dir().join("bandit_bcr.toml");
    let (code, out, _) = run_args(&[
        "bcr",
        "--config",
        path.to_str().unwrap(),
        "--horizon",
        "50",
        "--seed",
        "1",
        "--alpha",
        "0.05,1",
        "--set",
        "bcr.soft_controllers=true",
    ]);
    assert_eq!(code.unwrap(), 0);
    let alphas: Vec<String> = csv_rows(&out).into_iter().map(|r| r[2].clone()).collect();
    assert_eq!(alphas, ["0.05", "0.05", "1.0", "1.0"]);
}

#[test]
fn set_overrides_config_values() {
    let path = configs_dir().join("estimate.toml");
    let (code, out, _) = run_args(&["estimate", "--config", path.to_str().unwrap(), "--set", "id=renamed", "--set", "seeds=[4]"]);
    assert_eq!(code.unwrap(), 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[0] == "renamed" && r[3] == "4"));
}

#[test]
fn natural_log_base_scales_divergence() {
    let path = configs_dir().join("control_sweep.toml");
    let p = path.to_str().unwrap();
    let kl = |base: &str| -> Vec<f64> {
        let (code, out, _) = run_args(&["solve-control", "--config", p, "--log-base", base]);
        assert_eq!(code.unwrap(), 0);
        csv_rows(&out).into_iter().filter(|r| r[4] == "kl_cost").map(|r| r[5].parse().unwrap()).collect()
    };
    for (bits, nats) in kl("2").iter().zip(kl("e")) {
        assert!((bits * std::f64::consts::LN_2 - nats).abs() < 1e-15);
    }
}

#[test]
fn parallel_cells_give_identical_csv() {
    for (sub, name) in [("solve-control", "control_sweep"), ("bcr", "bandit_bcr"), ("estimate", "estimate")] {
        let path = configs_dir().join(format!("{name}.toml"));
        let p = path.to_str().unwrap();
        let (_, one, _) = run_args(&[sub, "--config", p, "--horizon", "60", "--jobs", "1"]);
        let (_, four, _) = run_args(&[sub, "--config", p, "--horizon", "60", "--jobs", "4"]);
        assert_eq!(one, four, "{name}");
    }
}

#[test]
fn gvp_table_file_is_resolved_next_to_the_config() {
    let (code, out, _) = run_args(&["gvp", "--config", configs_dir().join("gvp_latent.toml").to_str().unwrap()]);
    assert_eq!(code.unwrap(), 0);
    assert_eq!(csv_rows(&out).len(), 9);
}

#[test]
fn kind_mismatch_and_missing_config_are_errors() {
    let path = configs_dir().join("estimate.toml");
    assert!(run_args(&["bcr", "--config", path.to_str().unwrap()]).0.is_err());
    assert!(run_args(&["gvp"]).0.is_err());
}

#[test]
fn out_flag_writes_file_and_summary_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let (code, out, _) = run_args(&[
        "solve-control",
        "--config",
        configs_dir().join("control_sweep.toml").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--summary",
    ]);
    assert_eq!(code.unwrap(), 0);
    assert!(out.contains("objective") && out.contains("0.001"));
    assert!(std::fs::read_to_string(out_path).unwrap().starts_with("experiment_id,"));
}

#[test]
fn verify_mutation_exits_nonzero() {
    let bin = env!("CARGO_BIN_EXE_freeutil");
    let status = Command::new(bin)
        .args(["verify", "--suite", "conjugacy_round_trip", "--mutate", "gibbs-normalizer"])
        .output()
        .unwrap();
    assert_ne!(status.status.code(), Some(0));
    let report = String::from_utf8(status.stderr).unwrap();
    assert!(report.contains("FAIL") && report.contains("runtime_ms"), "{report}");

    let healthy = Command::new(bin).args(["verify", "--suite", "conjugacy_round_trip"]).output().unwrap();
    assert_eq!(healthy.status.code(), Some(0));
}

#[test]
fn bad_input_exits_with_error_status() {
    let bin = env!("CARGO_BIN_EXE_freeutil");
    let out = Command::new(bin).args(["estimate", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(freeutil_cli::EXIT_ERROR));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}

#[test]
fn empty_config_has_verify_kind() {
    let c = ExperimentConfig::empty(Kind::Verify);
    assert_eq!(c.kind, Some(Kind::Verify));
}
