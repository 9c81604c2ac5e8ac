//! Configuration and command drivers for the `thresh2d` binary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thresh2d::grid::{BandWindow, Grid2D, GridFunction};
use thresh2d::inversion::{certify, expand_regular, expand_singular};
use thresh2d::potential::factor_potential;
use thresh2d::potential::{Potential, Profile};
use thresh2d::threshold::{
    classify_ops, coupling_scan, ClassifyOptions, Crossing, SingularityKind, ThresholdOperators,
};
use thresh2d::verify::{run_criterion, suite, CriterionOutcome};
use thresh2d::waveop::{
    band_limited_packet, lp_growth_probe, w_stationary, w_time_dependent, DilationFamily, InverseMode, QuadratureScheme,
};
use thresh2d::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub profile: Profile,
    pub coupling: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub kernel: f64,
    pub min_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = ClassifyOptions::default();
        Self {
            kernel: d.tol,
            min_gap: d.min_gap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub g_range: [f64; 2],
    pub steps: usize,
}

/// Band-limited packet: window projection of a Gaussian of the given width (times x₁/width if dipole).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub window: [f64; 2],
    pub width: f64,
    #[serde(default)]
    pub dipole: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveMode {
    Stationary,
    TimeDependent,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    pub input: PacketSpec,
    pub mode: WaveMode,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_pad")]
    pub pad: usize,
}

fn default_times() -> Vec<f64> {
    vec![10.0, 20.0]
}

fn default_pad() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub base: PacketSpec,
    pub scales: Vec<f64>,
    pub ps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    #[serde(default = "default_cutoff")]
    pub cutoff_a: f64,
    #[serde(default = "default_band")]
    pub lambda_band: [f64; 2],
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveop: Option<WaveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

fn default_cutoff() -> f64 {
    0.5
}

fn default_band() -> [f64; 2] {
    [1e-3, 1e-1]
}

/// A failure mapped to a process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::IllConditioned { .. }) {
            EXIT_WARNINGS
        } else {
            EXIT_CONFIG
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::config(e.to_string())
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid2D, CliError> {
        Ok(Grid2D::new(self.grid.n, self.grid.half_width)?)
    }

    /// Checks every numeric field against the module preconditions; no heavy work.
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid()?;
        if !self.potential.coupling.is_finite() {
            return Err(CliError::config("coupling must be finite"));
        }
        if let Profile::Tabulated { file } = &self.potential.profile {
            if !file.exists() {
                return Err(CliError::config(format!("potential file {} not found", file.display())));
            }
        } else {
            self.potential.profile.validate()?;
        }
        positive("cutoff_a", self.cutoff_a)?;
        let [lo, hi] = self.lambda_band;
        positive("lambda_band[0]", lo)?;
        if !(hi > lo) {
            return Err(CliError::config(format!("lambda_band needs lo < hi, got [{lo}, {hi}]")));
        }
        positive("tolerances.kernel", self.tolerances.kernel)?;
        positive("tolerances.min_gap", self.tolerances.min_gap)?;
        if let Some(scan) = &self.scan {
            let [a, b] = scan.g_range;
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(CliError::config(format!(
                    "scan.g_range needs finite lo ≤ hi, got [{a}, {b}]"
                )));
            }
            if scan.steps == 0 {
                return Err(CliError::config("scan.steps must be at least 1"));
            }
        }
        if let Some(w) = &self.waveop {
            check_packet(&w.input, &grid)?;
            if w.times.is_empty() || w.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(CliError::config("waveop.times must be non-empty and positive"));
            }
            if w.times.windows(2).any(|p| p[1] <= p[0]) {
                return Err(CliError::config("waveop.times must be increasing"));
            }
            if w.pad == 0 || !w.pad.is_power_of_two() {
                return Err(CliError::config("waveop.pad must be a power of two"));
            }
        }
        if let Some(p) = &self.probe {
            check_packet(&p.base, &grid)?;
            if p.ps.is_empty() || p.ps.iter().any(|x| !(x.is_finite() && *x > 1.0)) {
                return Err(CliError::config("probe.ps must be non-empty, finite and above 1"));
            }
            if p.scales.is_empty() || p.scales[0] <= 0.0 || p.scales.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::config("probe.scales must be positive and increasing"));
            }
        }
        Ok(())
    }

    fn potential(&self) -> Result<Potential, CliError> {
        Ok(Potential::from_profile(
            self.grid()?,
            &self.potential.profile,
            self.potential.coupling,
        )?)
    }

    fn classify_options(&self, strict: bool) -> ClassifyOptions {
        ClassifyOptions {
            tol: self.tolerances.kernel,
            min_gap: self.tolerances.min_gap,
            strict,
        }
    }
}

fn check_packet(p: &PacketSpec, grid: &Grid2D) -> Result<(), CliError> {
    positive("packet width", p.width)?;
    BandWindow::new(p.window[0], p.window[1], grid)?;
    Ok(())
}

fn packet(p: &PacketSpec, grid: Grid2D) -> Result<(GridFunction, BandWindow), CliError> {
    let win = BandWindow::new(p.window[0], p.window[1], &grid)?;
    Ok((band_limited_packet(grid, &win, p.width, p.dipole), win))
}

fn ensure_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::config(format!("{}: {e}", out.display())))
}

/// Writes `report.json` and the expansion certificate `certificate.json` over the λ-band;
/// exit 2 in strict mode when the report carries warnings.
pub fn cmd_classify(cfg: &RunConfig, out: &Path, strict: bool) -> Result<i32, CliError> {
    ensure_dir(out)?;
    let pot = cfg.potential()?;
    let ops = ThresholdOperators::new(&factor_potential(&pot))?;
    let report = classify_ops(&ops, &cfg.classify_options(strict), pot.l1_norm())?;
    fs::write(out.join("report.json"), report.to_json()? + "\n")?;
    let band = (cfg.lambda_band[0], cfg.lambda_band[1]);
    let expansion = if report.kind == SingularityKind::Regular {
        expand_regular(&ops, &report, band)?
    } else {
        expand_singular(&ops, &report, band)?
    };
    let certificate = certify(&expansion, &ops.active, 5)?;
    fs::write(
        out.join("certificate.json"),
        serde_json::to_string_pretty(&certificate)? + "\n",
    )?;
    println!(
        "kind={} rank_S1={} rank_S2={} rank_S3={} remainder_slope={:.3} (expected {})",
        report.kind,
        report.rank_s1,
        report.rank_s2,
        report.rank_s3,
        certificate.remainder_slope,
        certificate.remainder_order.0
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if strict && !report.warnings.is_empty() {
        EXIT_WARNINGS
    } else {
        EXIT_OK
    })
}

pub fn scan_csv(crossings: &[Crossing]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["g_star", "kind", "rank_S1", "gap"])?;
    for c in crossings {
        w.write_record([
            format!("{:.15e}", c.g_star),
            c.kind.to_string(),
            c.rank_s1.to_string(),
            format!("{:.6e}", c.gap),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::config(e.to_string()))?).expect("ascii"))
}

/// Writes `scan.csv` with one row per kernel crossing.
pub fn cmd_scan(cfg: &RunConfig, out: &Path, strict: bool) -> Result<i32, CliError> {
    ensure_dir(out)?;
    let scan = cfg
        .scan
        .ok_or_else(|| CliError::config("config has no `scan` section"))?;
    let [lo, hi] = scan.g_range;
    let crossings = if lo < hi {
        let shape = Potential::from_profile(cfg.grid()?, &cfg.potential.profile, 1.0)?;
        coupling_scan(&shape, (lo, hi), scan.steps, &cfg.classify_options(strict))?
    } else {
        vec![]
    };
    fs::write(out.join("scan.csv"), scan_csv(&crossings)?)?;
    println!("{} crossing(s)", crossings.len());
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveMetrics {
    pub l2_ratio: f64,
    pub times: Vec<f64>,
    pub increments: Vec<f64>,
    pub cross_error: Option<f64>,
    pub rejected_nodes: usize,
}

/// Writes `waveop.t2gf` (W₊u, binary grid format) and `metrics.json`.
pub fn cmd_waveop(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    ensure_dir(out)?;
    let spec = cfg
        .waveop
        .as_ref()
        .ok_or_else(|| CliError::config("config has no `waveop` section"))?;
    let pot = cfg.potential()?;
    let (u, win) = packet(&spec.input, pot.grid)?;
    let stationary = if spec.mode != WaveMode::TimeDependent {
        let q = QuadratureScheme::for_window(&win, cfg.cutoff_a, &pot.grid)?;
        Some(w_stationary(&pot, &u, &q, InverseMode::DirectSolve)?)
    } else {
        None
    };
    let evolution = if spec.mode != WaveMode::Stationary {
        Some(w_time_dependent(&pot, &u, &spec.times, None, spec.pad)?)
    } else {
        None
    };
    let td_last = evolution
        .as_ref()
        .map(|e| e.outputs.last().expect("times non-empty").clone());
    let w_u = match (&stationary, &td_last) {
        (Some(s), _) => s.w_u.clone(),
        (None, Some(t)) => t.clone(),
        _ => unreachable!("mode selects at least one oracle"),
    };
    let cross_error = match (&stationary, &td_last) {
        (Some(s), Some(t)) => Some(t.sub(&s.w_u).norm_l2() / s.w_u.norm_l2()),
        _ => None,
    };
    let metrics = WaveMetrics {
        l2_ratio: w_u.norm_l2() / u.norm_l2(),
        times: evolution.as_ref().map_or(vec![], |e| e.times.clone()),
        increments: evolution.as_ref().map_or(vec![], |e| e.increments.clone()),
        cross_error,
        rejected_nodes: stationary.as_ref().map_or(0, |s| s.rejected.len()),
    };
    w_u.write_binary(&out.join("waveop.t2gf"))?;
    fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&metrics)? + "\n")?;
    println!("l2_ratio={:.6}", metrics.l2_ratio);
    if let Some(e) = cross_error {
        println!("cross_error={e:.3e}");
    }
    Ok(EXIT_OK)
}

/// Writes `probe.csv` with one row per (member, p).
pub fn cmd_probe(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    ensure_dir(out)?;
    let spec = cfg
        .probe
        .as_ref()
        .ok_or_else(|| CliError::config("config has no `probe` section"))?;
    let pot = cfg.potential()?;
    let (base, win) = packet(&spec.base, pot.grid)?;
    let family = DilationFamily::new(base, win, spec.scales.clone())?;
    let res = lp_growth_probe(&pot, &spec.ps, &family, cfg.cutoff_a)?;
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["family_index", "scale", "p", "ratio", "quadrature_id"])?;
    for r in &res.rows {
        w.write_record([
            r.family_index.to_string(),
            r.scale.to_string(),
            r.p.to_string(),
            format!("{:.9e}", r.ratio),
            r.quadrature_id.clone(),
        ])?;
    }
    fs::write(
        out.join("probe.csv"),
        w.into_inner().map_err(|e| CliError::config(e.to_string()))?,
    )?;
    for &p in &spec.ps {
        println!("p={p} spread={:.4} growth={:.4}", res.spread(p), res.growth(p));
    }
    if !res.rejected.is_empty() {
        eprintln!("warning: {} quadrature node(s) rejected", res.rejected.len());
    }
    Ok(EXIT_OK)
}

/// Runs a suite, printing one line per criterion; exit 3 if any check fails.
pub fn cmd_verify(suite_id: &str, out: Option<&Path>) -> Result<i32, CliError> {
    let ids = suite(suite_id).map_err(|e| CliError::config(e.to_string()))?;
    let mut outcomes: Vec<CriterionOutcome> = vec![];
    for id in ids {
        let outcome = run_criterion(id)?;
        println!("{}", outcome.summary_line());
        outcomes.push(outcome);
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&outcomes)? + "\n")?;
    }
    Ok(if outcomes.iter().all(|o| o.passed()) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}
