use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thresh2d"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn gaussian_config(width: f64, coupling: f64, extra: &str) -> String {
    format!(
        r#"{{"potential": {{"profile": "gaussian", "width": {width}, "coupling": {coupling}}}, "grid": {{"n": 64, "half_width": 10.0}}{extra}}}"#
    )
}

#[test]
fn missing_config_exits_one() {
    let out = run(&["classify", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn missing_potential_file_exits_one() {
    let dir = scratch("missing_potential");
    let cfg = write_config(
        &dir,
        r#"{"potential": {"profile": "tabulated", "file": "/nonexistent/v.csv", "coupling": 1.0}, "grid": {"n": 32, "half_width": 8.0}}"#,
    );
    let out = run(&["classify", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_suite_exits_one() {
    assert_eq!(run(&["verify", "nope"]).status.code(), Some(1));
}

#[test]
fn inversion_suite_passes() {
    let dir = scratch("verify_inversion");
    let out = run(&["verify", "inversion", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("criterion 3 [PASS]"));
    assert!(dir.join("verify.json").exists());
}

#[test]
fn weak_gaussian_classifies_regular() {
    let dir = scratch("classify_regular");
    let cfg = write_config(&dir, &gaussian_config(0.8, 0.1, ""));
    let out = run(&["classify", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "Regular");
    assert!(dir.join("certificate.json").exists());
}

#[test]
fn scan_output_is_deterministic_and_nonempty() {
    let dir = scratch("scan");
    let cfg = write_config(
        &dir,
        &gaussian_config(1.0, 1.0, r#", "scan": {"g_range": [0.5, 10.0], "steps": 8}"#),
    );
    let mut runs = vec![];
    for k in 0..2 {
        let out_dir = dir.join(format!("run{k}"));
        let out = run(&["scan", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(fs::read(out_dir.join("scan.csv")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.starts_with("g_star,kind,rank_S1,gap\n"));
    assert!(text.lines().count() >= 2, "{text}");
}

#[test]
fn empty_scan_range_writes_header() {
    let dir = scratch("scan_empty");
    let cfg = write_config(
        &dir,
        &gaussian_config(0.8, 1.0, r#", "scan": {"g_range": [3.0, 3.0], "steps": 4}"#),
    );
    let out = run(&["scan", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.join("scan.csv")).unwrap(),
        "g_star,kind,rank_S1,gap\n"
    );
}

#[test]
fn zero_coupling_wave_operator_is_identity() {
    let dir = scratch("waveop_free");
    let extra =
        r#", "waveop": {"input": {"window": [0.5, 2.0], "width": 1.0}, "mode": "both", "times": [1.0], "pad": 4}"#;
    let cfg = write_config(&dir, &gaussian_config(0.8, 0.0, extra));
    let out = run(&["waveop", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert!((metrics["l2_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(metrics["cross_error"].as_f64().unwrap() < 1e-8);
    let dump = fs::read(dir.join("waveop.t2gf")).unwrap();
    assert_eq!(&dump[..4], b"T2GF");
    assert_eq!(dump.len(), 4 + 4 + 4 + 8 + 8 + 64 * 64 * 16);
}

#[test]
fn probe_writes_rows_per_member_and_exponent() {
    let dir = scratch("probe");
    let extra = r#", "probe": {"base": {"window": [1.0, 4.0], "width": 1.0, "dipole": true}, "scales": [1.0, 2.0], "ps": [2.0, 4.0]}"#;
    let cfg = write_config(&dir, &gaussian_config(0.8, 2.0, extra));
    let out = run(&["probe", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("probe.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family_index,scale,p,ratio,quadrature_id");
    assert_eq!(lines.len(), 1 + 2 * 2);
}
