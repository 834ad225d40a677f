use std::fs;
use std::path::Path;
use std::process::Command;

use aclab_cli::{run, Command as Experiment, ExperimentConfig};
use tempfile::TempDir;

fn aclab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_aclab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((name, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn repeated_runs_with_one_seed_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), r#"{"schema_version": 1, "n": 6, "trials": 2}"#);
    let outputs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let status = aclab(&["stress", "--config", &config, "--out", out.to_str().unwrap(), "--seed", "7", "--quiet"]);
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
            read_all(&out)
        })
        .collect();
    assert!(outputs[0].iter().any(|(name, _)| name == "summary.json"));
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_flag_changes_the_config_hash() {
    let base = ExperimentConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
    let mut other = base.clone();
    other.seed += 1;
    assert_ne!(base.hash(), other.hash());
    let mut moved = base.clone();
    moved.output_dir = Some("elsewhere".into());
    assert_eq!(base.hash(), moved.hash());
}

#[test]
fn malformed_configs_exit_with_code_two_and_write_nothing() {
    let tmp = TempDir::new().unwrap();
    for (i, json) in [
        r#"{"schema_version": 1, "unknown": 3}"#,
        r#"{"schema_version": 2}"#,
        r#"{"schema_version": 1, "n": 0}"#,
        r#"{"schema_version": 1, "region": {"half_width": 10, "interface_width": 2}, "n": 8}"#,
        r#"{"schema_version": 1, "p_values": [0.5]}"#,
        "not json",
    ]
    .iter()
    .enumerate()
    {
        let config = write_config(tmp.path(), json);
        let out = tmp.path().join(format!("out{i}"));
        let result = aclab(&["patch-test", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(result.status.code(), Some(2), "config {json}");
        assert!(!out.exists(), "config {json} left outputs behind");
    }
}

#[test]
fn missing_output_directory_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), r#"{"schema_version": 1, "n": 4}"#);
    assert_eq!(aclab(&["bond-density", "--config", &config, "--quiet"]).status.code(), Some(2));
}

#[test]
fn bond_density_passes_every_trial() {
    let config = ExperimentConfig::from_json(r#"{"schema_version": 1, "n": 12, "trials": 100, "seed": 3}"#).unwrap();
    let report = run(Experiment::BondDensity, &config).unwrap();
    assert_eq!(report.rows().len(), 100);
    assert!(report.passed());
}

#[test]
fn consistency_1d_reports_the_lower_bound() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"schema_version": 1, "dimension": 1, "sweep": {"sizes": [16, 32], "stretches": [1.05]}}"#,
    );
    let out = tmp.path().join("out");
    let result = aclab(&["consistency-1d", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(result.status.success());
    let table = fs::read_to_string(out.join("fields/qce_sharpness.csv")).unwrap();
    let header: Vec<_> = table.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "config_hash");
    assert!(header.contains(&"lower_bound"));
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("config_hash,command,case,n,k,p,trial,lhs,rhs,ratio,verdict"));
}

#[test]
fn two_dimensional_commands_reject_one_dimensional_configs() {
    let config = ExperimentConfig::from_json(r#"{"schema_version": 1, "dimension": 1}"#).unwrap();
    let err = run(Experiment::PatchTest, &config).err().unwrap();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn qce_coupling_fails_the_patch_test_with_exit_three() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), r#"{"schema_version": 1, "n": 8, "coupling": "qce"}"#);
    let out = tmp.path().join("out");
    let result = aclab(&["patch-test", "--config", &config, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(result.status.code(), Some(3));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "fail");
}

#[test]
fn every_command_runs_on_a_small_default_config() {
    let config = ExperimentConfig::from_json(r#"{"schema_version": 1, "n": 8, "trials": 1, "sweep": {"sizes": [8]}}"#).unwrap();
    for command in [
        Experiment::PatchTest,
        Experiment::Stress,
        Experiment::Consistency2d,
        Experiment::Counterexample,
        Experiment::Coarsen,
    ] {
        let report = run(command, &config).unwrap();
        assert!(report.passed(), "{}", command.name());
        assert!(!report.rows().is_empty());
    }
}
