use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparse-heat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_lists_commands_and_config_keys() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for word in ["reconstruct", "study-space", "study-time", "study-smoothing", "selftest", "noise_level", "time_steps_list", "smoothing"] {
        assert!(text.contains(word), "{word}");
    }
    let out = run(&["reconstruct", "--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--config", "--out", "--threads", "--seed", "--tol"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["reconstruct", "--config", "/does/not/exist.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["reconstruct"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"mesh_n": 8, "time_step": 4}"#);
    let out = run(&["reconstruct", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time_step"));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(": ok")).count(), 2, "{text}");
}

#[test]
fn iteration_cap_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"mesh_n": 16, "time_steps": 8, "pdap": {"max_outer_iterations": 1}}"#);
    let out_dir = dir.path().join("out");
    let out = run(&["reconstruct", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("not-converged"));
    assert!(out_dir.join("measure.json").exists());
}

#[test]
fn seed_flag_changes_noisy_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"mesh_n": 16, "time_steps": 8, "noise_level": 0.05}"#);
    let mut fields = Vec::new();
    for seed in ["3", "3", "4"] {
        let out_dir = dir.path().join(format!("out{}", fields.len()));
        let out = run(&[
            "reconstruct",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
            "--threads",
            "1",
        ]);
        assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
        fields.push(std::fs::read(out_dir.join("field.csv")).unwrap());
    }
    assert_eq!(fields[0], fields[1]);
    assert_ne!(fields[0], fields[2]);
}

#[test]
fn study_commands_print_slope_and_write_errors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"mesh_n": 16, "levels": [4, 8, 16], "time_steps": 8, "time_steps_list": [4, 8, 16],
            "smoothing": {"levels": [16, 32, 64]}}"#,
    );
    for command in ["study-space", "study-time", "study-smoothing"] {
        let out_dir = dir.path().join(command);
        let out = run(&[command, "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--tol", "1e-9"]);
        assert_eq!(out.status.code(), Some(0), "{command}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8(out.stdout).unwrap().starts_with("slope="));
        let csv = std::fs::read_to_string(out_dir.join("errors.csv")).unwrap();
        assert_eq!(csv.lines().next(), Some("param,error,eoc"));
        assert_eq!(csv.lines().count(), 3);
    }
}
