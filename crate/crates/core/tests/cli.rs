//! Black-box tests of the command-line binary: exit codes, report output,
//! and reproducibility across seeds and environments.

use std::path::Path;
use std::process::{Command, Output};

const BARBELL: &str = "n 6\n0 1\n0 2\n1 2\n3 4\n3 5\n4 5\n2 3\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqcomm"))
}

fn write_barbell(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("barbell.txt");
    std::fs::write(&path, BARBELL).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should launch")
}

#[test]
fn detect_barbell_reports_k_star_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_barbell(dir.path());
    let out_path = dir.path().join("report.json");
    let output = run(bin()
        .args(["detect", "--input"])
        .arg(&input)
        .args(["--format", "edge", "--seed", "5", "--alpha", "0.1", "--out"])
        .arg(&out_path));
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("K* = 2"), "stdout:\n{stdout}");
    assert!(stdout.contains("K-hat(0.100000) = 2"), "stdout:\n{stdout}");

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["command"], "detect");
    assert_eq!(json["k_star"], 2);
    assert_eq!(json["inputs"]["seed"], 5);
}

#[test]
fn seed_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_barbell(dir.path());
    let report = |cmd: &mut Command, extra: &[&str]| {
        let out = dir.path().join("r.json");
        let output = run(cmd
            .args(["detect", "--input"])
            .arg(&input)
            .args(["--format", "edge", "--out"])
            .arg(&out)
            .args(extra));
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        std::fs::read(&out).unwrap()
    };
    let via_flag = report(bin().env_remove("SEQCOMM_SEED"), &["--seed", "9"]);
    let via_env = report(bin().env("SEQCOMM_SEED", "9"), &[]);
    let other = report(bin().env("SEQCOMM_SEED", "9"), &["--seed", "10"]);
    assert_eq!(via_flag, via_env, "flag and env seed must agree");
    assert_ne!(via_flag, other, "flag must override the environment seed");
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let output = run(bin().args([
        "detect",
        "--input",
        "/nonexistent/graph.txt",
        "--format",
        "edge",
    ]));
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
}

#[test]
fn unknown_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_barbell(dir.path());
    let output = run(bin()
        .args(["detect", "--input"])
        .arg(&input)
        .args(["--format", "graphml"]));
    assert!(!output.status.success());
}

#[test]
fn correlation_input_requires_tau() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.csv");
    std::fs::write(&path, "1.0,0.8\n0.8,1.0\n").unwrap();
    let output = run(bin()
        .args(["detect", "--input"])
        .arg(&path)
        .args(["--format", "corr"]));
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("tau"));
}

#[test]
fn malformed_edge_list_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "0 1\n1 2\n").unwrap();
    let output = run(bin()
        .args(["detect", "--input"])
        .arg(&path)
        .args(["--format", "edge"]));
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn exhausted_calibration_rounds_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_barbell(dir.path());
    let output = run(bin()
        .args(["select-alpha", "--input"])
        .arg(&input)
        .args([
            "--format",
            "edge",
            "--gamma",
            "1.0",
            "--max-rounds",
            "0",
            "--seed",
            "1",
        ]));
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("converge"));
}

#[test]
fn select_alpha_emits_csv_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_barbell(dir.path());
    let csv_path = dir.path().join("grid.csv");
    let output = run(bin()
        .args(["select-alpha", "--input"])
        .arg(&input)
        .args(["--format", "edge", "--gamma", "1.0", "--seed", "1", "--eps-alpha", "0.05", "--csv"])
        .arg(&csv_path));
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("tau,gamma,selected_alpha"));
    let row = lines.next().expect("one data row");
    assert!(row.starts_with(",1,"), "row: {row}");
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_barbell(dir.path());
    let mut reports = Vec::new();
    for threads in ["1", "2", "8"] {
        let out = dir.path().join(format!("r{threads}.json"));
        let output = run(bin()
            .env("RAYON_NUM_THREADS", threads)
            .args(["detect", "--input"])
            .arg(&input)
            .args(["--format", "edge", "--seed", "3", "--out"])
            .arg(&out));
        assert!(output.status.success());
        reports.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}
