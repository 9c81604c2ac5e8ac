use thresh2d::Error;
use thresh2d_cli::{scan_csv, CliError, RunConfig, EXIT_CONFIG, EXIT_WARNINGS};

const FULL: &str = r#"{
  "potential": {"profile": "gaussian", "width": 0.8, "center": [0.5, -0.25], "coupling": 5.0},
  "grid": {"n": 64, "half_width": 10.0},
  "cutoff_a": 0.4,
  "lambda_band": [0.002, 0.05],
  "tolerances": {"kernel": 1e-9, "min_gap": 50.0},
  "scan": {"g_range": [0.5, 10.0], "steps": 6},
  "waveop": {"input": {"window": [0.5, 2.0], "width": 1.0, "dipole": true}, "mode": "both", "times": [1.0, 2.0], "pad": 4},
  "probe": {"base": {"window": [1.0, 4.0], "width": 1.0}, "scales": [1.0, 2.0], "ps": [1.5, 4.0]}
}"#;

#[test]
fn round_trip_preserves_structure() {
    let cfg = RunConfig::from_json(FULL).unwrap();
    let again = RunConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.to_json(), cfg.to_json());
}

#[test]
fn defaults_fill_optional_fields() {
    let cfg = RunConfig::from_json(r#"{"potential": {"profile": "ring", "radius": 2.0, "width": 0.5, "coupling": 1.0}, "grid": {"n": 32, "half_width": 8.0}}"#).unwrap();
    assert_eq!(cfg.cutoff_a, 0.5);
    assert_eq!(cfg.lambda_band, [1e-3, 1e-1]);
    assert!(cfg.scan.is_none() && cfg.waveop.is_none() && cfg.probe.is_none());
    assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn invalid_fields_are_rejected_before_work() {
    let bad = [
        FULL.replace(r#""n": 64"#, r#""n": 48"#),
        FULL.replace("[0.002, 0.05]", "[0.05, 0.002]"),
        FULL.replace(r#""cutoff_a": 0.4"#, r#""cutoff_a": -1.0"#),
        FULL.replace(r#""steps": 6"#, r#""steps": 0"#),
        FULL.replace(r#""pad": 4"#, r#""pad": 3"#),
        FULL.replace("[1.5, 4.0]", "[0.5]"),
        FULL.replace(r#""window": [1.0, 4.0]"#, r#""window": [1.0, 400.0]"#),
        FULL.replace(r#""cutoff_a""#, r#""cutof_a""#),
        r#"{"potential": {"profile": "tabulated", "file": "/nonexistent/v.t2gf", "coupling": 1.0}, "grid": {"n": 32, "half_width": 8.0}}"#.to_string(),
    ];
    for text in &bad {
        let err = RunConfig::from_json(text).expect_err(text);
        assert_eq!(err.code, EXIT_CONFIG, "{}", err.message);
    }
}

#[test]
fn empty_scan_is_header_only() {
    assert_eq!(scan_csv(&[]).unwrap(), "g_star,kind,rank_S1,gap\n");
}

#[test]
fn error_kinds_map_to_exit_codes() {
    let ill: CliError = Error::IllConditioned {
        stage: 1,
        gap: 3.0,
        min_gap: 100.0,
    }
    .into();
    assert_eq!(ill.code, EXIT_WARNINGS);
    let domain: CliError = Error::Domain("x".into()).into();
    assert_eq!(domain.code, EXIT_CONFIG);
}
