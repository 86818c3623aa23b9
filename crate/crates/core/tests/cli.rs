//! Integration tests for the config parser, scan driver, and command-line
//! binary. Uses a deliberately cheap parameter set so the whole file runs in
//! seconds.

use std::io::Write as _;
use std::process::Command;

use chsh_mdi_qkd::cli::{parse_config, run_scan};

const CHEAP_CONFIG: &str = "\
protocol = chsh-mdi
decoys = 0, 0.1
signal_grid = 0.3:0.5:0.1
dark_count = 6e-6
det_efficiency = 0.145
fiber_loss_db_km = 0.2
f = 1.16
distances = 0:10:10
cutoff = 3
phase_nodes = 16
out = scan.csv
";

fn write_config(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
    let path = dir.path().join("run.cfg");
    let mut file = std::fs::File::create(&path).unwrap();
    file.write_all(body.as_bytes()).unwrap();
    path
}

#[test]
fn scan_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = parse_config(CHEAP_CONFIG).unwrap();
    config.out = dir.path().join("scan.csv");
    let mut first_summary = Vec::new();
    run_scan(&config, &mut first_summary).unwrap();
    let first_csv = std::fs::read(&config.out).unwrap();
    let mut second_summary = Vec::new();
    run_scan(&config, &mut second_summary).unwrap();
    let second_csv = std::fs::read(&config.out).unwrap();
    assert!(!first_csv.is_empty());
    assert_eq!(first_csv, second_csv, "repeated runs must produce byte-identical CSV");
    assert_eq!(first_summary, second_summary);
}

#[test]
fn scan_output_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = parse_config(CHEAP_CONFIG).unwrap();
    config.out = dir.path().join("scan.csv");
    let mut summary = Vec::new();
    run_scan(&config, &mut summary).unwrap();
    assert!(!summary.is_empty());
    let text = std::fs::read_to_string(&config.out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "distance_km,mu_s,y11_lower,g11_lower,gain,error,rate,protocol,N"
    );
    let data: Vec<&str> = lines.by_ref().take_while(|l| !l.is_empty()).collect();
    assert_eq!(data.len(), 2, "distances 0:10:10 should yield two rows");
    for row in data {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 9);
        for f in &fields[..7] {
            f.parse::<f64>().unwrap();
        }
        assert_eq!(fields[7], "CHSH-MDI");
        assert_eq!(fields[8], "inf");
    }
}

#[test]
fn binary_scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("result.csv");
    let body = CHEAP_CONFIG.replace("out = scan.csv", &format!("out = {}", out.display()));
    let config = write_config(&dir, &body);
    let status = Command::new(env!("CARGO_BIN_EXE_chsh-mdi-qkd"))
        .args(["scan", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("distance_km,"));
}

#[test]
fn binary_diag_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(&dir, CHEAP_CONFIG);
    let output = Command::new(env!("CARGO_BIN_EXE_chsh-mdi-qkd"))
        .args(["diag", "--config"])
        .arg(&config)
        .args(["--distance", "10"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("y11"), "diagnostics should mention the yield bound:\n{text}");
    assert!(text.contains("g11"), "diagnostics should mention the witness bound:\n{text}");
}

#[test]
fn binary_rejects_invalid_config_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(&dir, "protocol = chsh-mdi\nnot a key value line\n");
    let output = Command::new(env!("CARGO_BIN_EXE_chsh-mdi-qkd"))
        .args(["scan", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

#[test]
fn binary_rejects_missing_file_with_exit_code_2() {
    let output = Command::new(env!("CARGO_BIN_EXE_chsh-mdi-qkd"))
        .args(["scan", "--config", "/nonexistent/path.cfg"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
