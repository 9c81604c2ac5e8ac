//! Zero-energy classification chain, resonance reconstruction and coupling scans.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::dense::{symmetric_eigen, DenseOperator};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::ops::{apply_n0, build_static_on, v_hat, StaticOp};
use crate::potential::{factor_potential, ActiveSet, FactoredPotential, Potential};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MIN_GAP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityKind {
    Regular,
    FirstKind,
    SecondKind,
    ThirdKind,
}

impl std::fmt::Display for SingularityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Relative kernel threshold (times the stage scale).
    pub tol: f64,
    pub min_gap: f64,
    pub strict: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            min_gap: DEFAULT_MIN_GAP,
            strict: false,
        }
    }
}

/// Kernel decision diagnostics for one stage of the chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: u8,
    pub threshold: f64,
    /// Smallest |eigenvalue| kept outside the kernel.
    pub min_retained: Option<f64>,
    /// Largest |eigenvalue| assigned to the kernel.
    pub max_discarded: Option<f64>,
    /// min_retained / threshold
    pub gap: f64,
    /// threshold / max_discarded
    pub margin: f64,
}

impl StageDiagnostics {
    pub fn separation(&self) -> f64 {
        self.gap.min(self.margin)
    }
}

/// Projection onto the numerical kernel of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct KernelProjection {
    /// Orthonormal kernel basis as columns.
    pub basis: Mat<f64>,
    pub projector: Mat<f64>,
    pub eigenvalues: Vec<f64>,
    pub diagnostics: StageDiagnostics,
}

/// Kernel of a symmetric matrix: eigenvectors with |μ| < tol·scale (scale = max |μ| if None).
pub fn kernel_projector(a: &Mat<f64>, tol: f64, scale: Option<f64>) -> Result<KernelProjection> {
    kernel_projector_stage(a, tol, scale, 0)
}

fn kernel_projector_stage(a: &Mat<f64>, tol: f64, scale: Option<f64>, stage: u8) -> Result<KernelProjection> {
    let n = a.nrows();
    let (vals, vecs) = symmetric_eigen(a)?;
    let smax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = tol * scale.unwrap_or(smax).max(f64::MIN_POSITIVE);
    let kernel: Vec<usize> = (0..n).filter(|&k| vals[k].abs() < threshold).collect();
    let min_retained = (0..n)
        .filter(|k| !kernel.contains(k))
        .map(|k| vals[k].abs())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let max_discarded = kernel
        .iter()
        .map(|&k| vals[k].abs())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let gap = min_retained.map_or(f64::INFINITY, |v| v / threshold);
    let margin = max_discarded.map_or(f64::INFINITY, |v| if v == 0.0 { f64::INFINITY } else { threshold / v });
    let basis = Mat::from_fn(n, kernel.len(), |i, j| vecs[(i, kernel[j])]);
    let projector = &basis * basis.transpose();
    Ok(KernelProjection {
        basis,
        projector,
        eigenvalues: vals,
        diagnostics: StageDiagnostics {
            stage,
            threshold,
            min_retained,
            max_discarded,
            gap,
            margin,
        },
    })
}

/// Householder frame whose last N−1 columns span the orthogonal complement of v̂.
#[derive(Clone, Debug)]
pub struct QFrame {
    u: Vec<f64>,
    beta: f64,
}

impl QFrame {
    pub fn new(v_hat: &[f64]) -> Self {
        let mut u = v_hat.to_vec();
        let s = if u[0] >= 0.0 { 1.0 } else { -1.0 };
        u[0] += s;
        let beta = 2.0 / u.iter().map(|x| x * x).sum::<f64>();
        Self { u, beta }
    }

    /// Zᵀ A Z for symmetric A, Z = columns 1.. of the reflector.
    pub fn restrict(&self, a: &Mat<f64>) -> Mat<f64> {
        let n = a.nrows();
        let (u, b) = (&self.u, self.beta);
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * u[j]).sum()).collect();
        let uw: f64 = u.iter().zip(&w).map(|(x, y)| x * y).sum();
        Mat::from_fn(n - 1, n - 1, |i, j| {
            let (i, j) = (i + 1, j + 1);
            a[(i, j)] - b * u[i] * w[j] - b * w[i] * u[j] + b * b * uw * u[i] * u[j]
        })
    }

    /// Z y in full coordinates.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(y.len() + 1);
        z.push(0.0);
        z.extend_from_slice(y);
        let d: f64 = self.u.iter().zip(&z).map(|(a, b)| a * b).sum();
        for (zi, ui) in z.iter_mut().zip(&self.u) {
            *zi -= self.beta * d * ui;
        }
        z
    }

    pub fn lift_columns(&self, y: &Mat<f64>) -> Mat<f64> {
        let cols: Vec<Vec<f64>> = (0..y.ncols())
            .map(|j| self.lift(&(0..y.nrows()).map(|i| y[(i, j)]).collect::<Vec<_>>()))
            .collect();
        Mat::from_fn(y.nrows() + 1, y.ncols(), |i, j| cols[j][i])
    }
}

fn empty_basis() -> Mat<f64> {
    Mat::zeros(0, 0)
}

fn mat_to_rows(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn sandwich_basis(z: &Mat<f64>, a: &Mat<f64>) -> Mat<f64> {
    let t = z.transpose() * a * z;
    Mat::from_fn(t.nrows(), t.ncols(), |i, j| 0.5 * (t[(i, j)] + t[(j, i)]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub kind: SingularityKind,
    pub rank_s1: usize,
    pub rank_s2: usize,
    pub rank_s3: usize,
    /// Orthonormal bases (columns, weighted active-set coordinates).
    #[serde(skip, default = "empty_basis")]
    pub basis_s1: Mat<f64>,
    #[serde(skip, default = "empty_basis")]
    pub basis_s2: Mat<f64>,
    #[serde(skip, default = "empty_basis")]
    pub basis_s3: Mat<f64>,
    pub t1: Vec<Vec<f64>>,
    pub t2: Vec<Vec<f64>>,
    pub t3: Vec<Vec<f64>>,
    /// Eigenvalues −κ_j² of T₂ (ascending, so κ₁ ≥ κ₂), basis_s2 is aligned with them.
    pub eig_t2: Vec<f64>,
    /// Projections ⟨T₀ζ, v̂⟩ of the S₁ basis onto v̂.
    pub c1: f64,
    pub stages: Vec<StageDiagnostics>,
    pub warnings: Vec<String>,
    pub active_nodes: usize,
    pub coupling_norm_l1: f64,
}

impl ThresholdReport {
    /// Stage-1 gap as reported in scans.
    pub fn gap(&self) -> f64 {
        self.stages.first().map_or(f64::INFINITY, |s| s.gap)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything the inversion module needs about the static threshold operators.
pub struct ThresholdOperators {
    pub active: ActiveSet,
    pub v_hat: Vec<f64>,
    pub t0: Mat<f64>,
    pub vg1v: Mat<f64>,
    pub vg2v: Mat<f64>,
}

impl ThresholdOperators {
    pub fn new(fp: &FactoredPotential) -> Result<Self> {
        let active = fp.active()?;
        let vh = v_hat(&active).iter().map(|x| x.re).collect();
        let t0 = build_static_on(StaticOp::T0, &active).real_part();
        let vg1v = build_static_on(StaticOp::VG1V, &active).real_part();
        let vg2v = build_static_on(StaticOp::VG2V, &active).real_part();
        Ok(Self {
            active,
            v_hat: vh,
            t0,
            vg1v,
            vg2v,
        })
    }
}

pub fn classify(pot: &Potential, opts: &ClassifyOptions) -> Result<ThresholdReport> {
    let fp = factor_potential(pot);
    let ops = ThresholdOperators::new(&fp)?;
    classify_ops(&ops, opts, pot.l1_norm())
}

pub fn classify_ops(ops: &ThresholdOperators, opts: &ClassifyOptions, l1: f64) -> Result<ThresholdReport> {
    let n = ops.active.len();
    let frame = QFrame::new(&ops.v_hat);
    let qtq = frame.restrict(&ops.t0);
    let k1 = kernel_projector_stage(&qtq, opts.tol, None, 1)?;
    let scale1 = k1.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let basis_s1 = frame.lift_columns(&k1.basis);
    let mut stages = vec![k1.diagnostics.clone()];
    let r1 = basis_s1.ncols();
    let empty = Mat::<f64>::zeros(n, 0);
    let mut report = ThresholdReport {
        kind: SingularityKind::Regular,
        rank_s1: r1,
        rank_s2: 0,
        rank_s3: 0,
        basis_s1: basis_s1.clone(),
        basis_s2: empty.clone(),
        basis_s3: empty,
        t1: vec![],
        t2: vec![],
        t3: vec![],
        eig_t2: vec![],
        c1: 0.0,
        stages: vec![],
        warnings: vec![],
        active_nodes: n,
        coupling_norm_l1: l1,
    };
    if r1 > 0 {
        // T₁ = aaᵀ with a = Z₁ᵀ T₀ v̂
        let t0v: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| ops.t0[(i, j)] * ops.v_hat[j]).sum())
            .collect();
        let a: Vec<f64> = (0..r1)
            .map(|k| (0..n).map(|i| basis_s1[(i, k)] * t0v[i]).sum())
            .collect();
        let t1 = Mat::from_fn(r1, r1, |i, j| a[i] * a[j]);
        report.t1 = mat_to_rows(&t1);
        let k2 = kernel_projector_stage(&t1, opts.tol, Some(scale1 * scale1), 2)?;
        stages.push(k2.diagnostics.clone());
        let basis_s2 = &basis_s1 * &k2.basis;
        report.rank_s2 = basis_s2.ncols();
        if report.rank_s2 == 0 {
            report.kind = SingularityKind::FirstKind;
        } else {
            let t2 = sandwich_basis(&basis_s2, &ops.vg1v);
            let scale3 = ops.vg1v.norm_l2();
            let k3 = kernel_projector_stage(&t2, opts.tol, Some(scale3), 3)?;
            stages.push(k3.diagnostics.clone());
            let basis_s3 = &basis_s2 * &k3.basis;
            report.rank_s3 = basis_s3.ncols();
            if report.rank_s3 == 0 {
                report.kind = SingularityKind::SecondKind;
                let (vals, vecs) = symmetric_eigen(&t2)?;
                report.basis_s2 = &basis_s2 * &vecs;
                report.t2 = mat_to_rows(&sandwich_basis(&report.basis_s2, &ops.vg1v));
                report.eig_t2 = vals;
            } else {
                report.kind = SingularityKind::ThirdKind;
                report.t2 = mat_to_rows(&t2);
                report.basis_s2 = basis_s2;
                let t3 = sandwich_basis(&basis_s3, &ops.vg2v);
                let scale4 = ops.vg2v.norm_l2();
                let k4 = kernel_projector_stage(&t3, opts.tol, Some(scale4), 4)?;
                stages.push(k4.diagnostics.clone());
                if k4.basis.ncols() > 0 {
                    return Err(Error::Inconsistent(format!(
                        "T₃ has a {}-dimensional kernel; the discretization does not resolve the third-kind structure",
                        k4.basis.ncols()
                    )));
                }
                report.t3 = mat_to_rows(&t3);
                report.basis_s3 = basis_s3;
            }
            if report.kind == SingularityKind::SecondKind && report.rank_s2 > 2 {
                report.warnings.push(format!("rank S₂ = {} exceeds 2", report.rank_s2));
            }
        }
        report.c1 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    for s in &stages {
        if s.separation() < opts.min_gap {
            let msg = format!(
                "stage {} kernel separation {:.3e} below {}",
                s.stage,
                s.separation(),
                opts.min_gap
            );
            if opts.strict {
                return Err(Error::IllConditioned {
                    stage: s.stage,
                    gap: s.separation(),
                    min_gap: opts.min_gap,
                });
            }
            report.warnings.push(msg);
        }
    }
    report.stages = stages;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResonanceClass {
    SWave,
    PWave,
    Eigenfunction,
}

#[derive(Clone, Debug)]
pub struct ResonanceFunction {
    pub u: GridFunction,
    /// Far-field constant.
    pub c: c64,
    /// Dipole coefficients from the moment formula.
    pub b: [c64; 2],
    pub class: ResonanceClass,
    /// ζ in weighted active-set coordinates (orientation fixed).
    pub zeta: Vec<f64>,
}

/// Relative size below which c and b count as zero when assigning a class.
pub const CLASS_TOL: f64 = 1e-6;

/// u = N₀(vζ) − ⟨T₀ζ, v̂⟩/‖v‖, the bounded zero-energy solution attached to ζ ∈ S₁.
///
/// Far field: u → c + b·x/|x|² with c = −⟨T₀ζ, v̂⟩/‖v‖ and b_j = (1/2π)∫x_j vζ = −(1/2π)∫x_j V u.
pub fn reconstruct_resonance(zeta: &[f64], fp: &FactoredPotential) -> Result<ResonanceFunction> {
    let ops = ThresholdOperators::new(fp)?;
    reconstruct_with(zeta, &ops)
}

pub fn reconstruct_with(zeta: &[f64], ops: &ThresholdOperators) -> Result<ResonanceFunction> {
    let active = &ops.active;
    let n = active.len();
    if zeta.len() != n {
        return Err(Error::Argument("ζ length does not match the active set".into()));
    }
    let norm = zeta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let overlap: f64 = zeta.iter().zip(&ops.v_hat).map(|(a, b)| a * b).sum::<f64>() / norm;
    if overlap.abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("⟨v̂, ζ⟩ = {overlap:.3e} is not small")));
    }
    let mut z: Vec<f64> = zeta.iter().map(|x| x / norm).collect();
    let t0v: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| ops.t0[(i, j)] * ops.v_hat[j]).sum())
        .collect();
    let mut proj: f64 = z.iter().zip(&t0v).map(|(a, b)| a * b).sum();
    let h = active.grid.h();
    let dipole = |z: &[f64]| -> [f64; 2] {
        let mut d = [0.0; 2];
        for (a, &(x, y)) in active.points().iter().enumerate() {
            // ∫x_j v ζ dx with ζ(x_a) = z_a / h
            d[0] += x * active.v[a] * z[a] * h;
            d[1] += y * active.v[a] * z[a] * h;
        }
        d
    };
    let mut d = dipole(&z);
    let flip = if proj.abs() > CLASS_TOL * ops.t0.norm_l2() / (n as f64).sqrt() {
        proj < 0.0
    } else {
        let k = if d[0].abs() >= d[1].abs() { 0 } else { 1 };
        d[k] < 0.0
    };
    if flip {
        z.iter_mut().for_each(|x| *x = -*x);
        proj = -proj;
        d = [-d[0], -d[1]];
    }
    let v_norm = active.v_norm();
    let offset = proj / v_norm;
    // vζ on the grid
    let mut vz = GridFunction::zeros(active.grid);
    for (a, &k) in active.nodes.iter().enumerate() {
        vz.values[k] = c64::new(active.v[a] * z[a] / h, 0.0);
    }
    let u = apply_n0(&vz).map(|x| x - offset);
    let c = c64::new(-offset, 0.0);
    let b = [c64::new(d[0] / (2.0 * PI), 0.0), c64::new(d[1] / (2.0 * PI), 0.0)];
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    let class = if c.norm() > CLASS_TOL * scale {
        ResonanceClass::SWave
    } else if b[0].norm().hypot(b[1].norm()) > CLASS_TOL * scale {
        ResonanceClass::PWave
    } else {
        ResonanceClass::Eigenfunction
    };
    Ok(ResonanceFunction {
        u,
        c,
        b,
        class,
        zeta: z,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AsymptoticCoefficients {
    pub c_moment: c64,
    pub b_moment: [c64; 2],
    pub c_fit: c64,
    pub b_fit: [c64; 2],
    pub fit_residual: f64,
}

/// Moment formula b_j = −(1/2π)∫x_j V u next to a least-squares fit of
/// u ≈ c + b·x/|x|² on the annulus 0.6L ≤ |x| ≤ 0.8L.
pub fn asymptotic_coeffs(res: &ResonanceFunction, pot: &Potential) -> Result<AsymptoticCoefficients> {
    let g = pot.grid;
    let (r_in, r_out) = (0.6 * g.half_width, 0.8 * g.half_width);
    let vmax = pot.max_abs();
    let h2 = g.h().powi(2);
    let mut b_moment = [c64::new(0.0, 0.0); 2];
    let mut rows: Vec<[f64; 3]> = vec![];
    let mut rhs: Vec<c64> = vec![];
    for k in 0..g.len() {
        let (x, y) = g.point(k);
        let vu = res.u.values[k] * pot.values[k];
        b_moment[0] -= x * vu * h2 / (2.0 * PI);
        b_moment[1] -= y * vu * h2 / (2.0 * PI);
        let r = x.hypot(y);
        if r >= r_in && r <= r_out {
            if pot.values[k].abs() > 1e-8 * vmax {
                return Err(Error::Geometry("fit annulus overlaps the potential support".into()));
            }
            rows.push([1.0, x / (r * r), y / (r * r)]);
            rhs.push(res.u.values[k]);
        }
    }
    if rows.len() < 3 {
        return Err(Error::Geometry("fit annulus contains too few nodes".into()));
    }
    let a = DenseOperator::from_real_fn(rows.len(), 3, 1.0, |i, j| rows[i][j]);
    let at = a.transpose();
    let ata = at.mul(&a);
    let atb = at.apply(&rhs);
    let coef = ata.solve_vec(&atb);
    let fitted = a.apply(&coef);
    let resid = fitted
        .iter()
        .zip(&rhs)
        .map(|(f, r)| (f - r).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / rhs
            .iter()
            .map(|r| r.norm_sqr())
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
    Ok(AsymptoticCoefficients {
        c_moment: res.c,
        b_moment,
        c_fit: coef[0],
        b_fit: [coef[1], coef[2]],
        fit_residual: resid,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Crossing {
    pub g_star: f64,
    pub kind: SingularityKind,
    pub rank_s1: usize,
    pub gap: f64,
    /// Number of eigenvalues of QT₀Q crossing zero together.
    pub multiplicity: usize,
}

/// Coupling values g in `range` where QT₀Q for V = g·V₀ becomes singular.
///
/// Signed eigenvalues of QT₀Q are tracked on a uniform g grid; each sign change
/// is refined by a bracketing (Illinois) iteration to relative width 1e-10 and
/// the potential is classified at the root.
pub fn coupling_scan(
    profile_pot: &Potential,
    range: (f64, f64),
    n_steps: usize,
    opts: &ClassifyOptions,
) -> Result<Vec<Crossing>> {
    let (g_lo, g_hi) = range;
    if !(g_lo > 0.0 && g_hi >= g_lo) {
        return Err(Error::Argument(format!(
            "coupling range ({g_lo}, {g_hi}) must be positive and ordered"
        )));
    }
    if g_hi == g_lo || n_steps == 0 {
        return Ok(vec![]);
    }
    let fp = factor_potential(profile_pot);
    let base = ThresholdOperators::new(&fp)?;
    let frame = QFrame::new(&base.v_hat);
    let n = base.active.len();
    let sign = Mat::from_fn(n, n, |i, j| if i == j { base.active.sign[i] } else { 0.0 });
    let kernel = &base.t0 - &sign;
    let qs = frame.restrict(&sign);
    let qk = frame.restrict(&kernel);
    let eig = |g: f64| -> Result<Vec<f64>> {
        let m = &qs + &qk * faer::Scale(g);
        let (vals, _) = symmetric_eigen(&m)?;
        Ok(vals)
    };
    let neg = |vals: &[f64]| vals.iter().filter(|&&x| x < 0.0).count();
    let mut crossings: Vec<(f64, usize)> = vec![];
    let mut g_prev = g_lo;
    let mut e_prev = eig(g_prev)?;
    for s in 1..=n_steps {
        let g = g_lo + (g_hi - g_lo) * s as f64 / n_steps as f64;
        let e = eig(g)?;
        let (na, nb) = (neg(&e_prev), neg(&e));
        if na != nb {
            // sorted eigenvalue index that crosses first moving in the direction of g
            let indices: Vec<usize> = if na > nb {
                (nb..na).rev().collect()
            } else {
                (na..nb).collect()
            };
            for idx in indices {
                let root = refine_root(|gg| Ok(eig(gg)?[idx]), g_prev, g)?;
                crossings.push((root, idx));
            }
        }
        g_prev = g;
        e_prev = e;
    }
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, usize)> = vec![];
    for (g, _) in crossings {
        match merged.last_mut() {
            Some((g0, m)) if (g - *g0).abs() <= 1e-8 * g.abs() => *m += 1,
            _ => merged.push((g, 1)),
        }
    }
    let mut out = vec![];
    for (g_star, multiplicity) in merged {
        let scaled = base_scaled(&base, g_star);
        let report = classify_ops(&scaled, opts, profile_pot.l1_norm() * g_star)?;
        out.push(Crossing {
            g_star,
            kind: report.kind,
            rank_s1: report.rank_s1,
            gap: report.gap(),
            multiplicity,
        });
    }
    Ok(out)
}

fn base_scaled(base: &ThresholdOperators, g: f64) -> ThresholdOperators {
    let n = base.active.len();
    let t0 = Mat::from_fn(n, n, |i, j| {
        let d = if i == j { base.active.sign[i] } else { 0.0 };
        d + g * (base.t0[(i, j)] - d)
    });
    let sg = g.sqrt();
    let mut active = base.active.clone();
    active.v.iter_mut().for_each(|x| *x *= sg);
    active.w.iter_mut().for_each(|x| *x *= sg);
    ThresholdOperators {
        active,
        v_hat: base.v_hat.clone(),
        t0,
        vg1v: &base.vg1v * faer::Scale(g),
        vg2v: &base.vg2v * faer::Scale(g),
    }
}

/// Root of a continuous f with a sign change on [a, b], Illinois variant of regula falsi.
fn refine_root(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Inconsistent(
            "eigenvalue does not change sign on the bracket".into(),
        ));
    }
    let mut side = 0i8;
    for it in 0..200 {
        if (b - a).abs() <= 1e-10 * a.abs().max(b.abs()) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) || it % 8 == 7 {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        // a fixed-size step toward the root keeps the bracket shrinking on both ends
        if it % 8 == 6 {
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if fm.signum() == fb.signum() {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_projector_basic() {
        let id = Mat::<f64>::identity(3, 3);
        assert_eq!(kernel_projector(&id, 1e-6, None).unwrap().basis.ncols(), 0);
        let d = Mat::from_fn(3, 3, |i, j| if i == j { i as f64 } else { 0.0 });
        let k = kernel_projector(&d, 1e-6, None).unwrap();
        assert_eq!(k.basis.ncols(), 1);
        assert!((k.projector[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(k.projector[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn qframe_is_orthonormal_complement() {
        let v = [0.6, -0.8, 0.0];
        let f = QFrame::new(&v);
        let z0 = f.lift(&[1.0, 0.0]);
        let z1 = f.lift(&[0.0, 1.0]);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!(dot(&z0, &v).abs() < 1e-15 && dot(&z1, &v).abs() < 1e-15);
        assert!((dot(&z0, &z0) - 1.0).abs() < 1e-15 && dot(&z0, &z1).abs() < 1e-15);
        let a = Mat::from_fn(3, 3, |i, j| (i + j) as f64 + if i == j { 1.0 } else { 0.0 });
        let r = f.restrict(&a);
        let zt = Mat::from_fn(3, 2, |i, j| if j == 0 { z0[i] } else { z1[i] });
        let direct = zt.transpose() * &a * &zt;
        assert!((&r - &direct).norm_l2() < 1e-13);
    }

    #[test]
    fn illinois_finds_roots() {
        let r = refine_root(|x| Ok(x * x - 2.0), 0.0, 3.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
    }
}
