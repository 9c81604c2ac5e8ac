//! Stationary and time-dependent wave operators, the operator K, the good/bad
//! split of Π(λ)u and the Lᵖ growth probe.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::dense::DenseOperator;
use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::grid::{
    angles_for, chi_cutoff, dstar_project, fourier_forward, fourier_inverse, pi_lambda_at, BandWindow, CutoffSide,
    Grid2D, GridFunction, Space, Spectrum,
};
use crate::inversion::InverseExpansion;
use crate::ops::{build_m_on, build_vg0w_deriv_on, G0Convolver};
use crate::potential::{factor_potential, ActiveSet, Potential};
use crate::quad::gauss_legendre;
use crate::specfun::{bessel_j0, bessel_j_orders, hankel_orders, resolvent_kernel, Branch};

const ZERO: c64 = c64::new(0.0, 0.0);
const PANEL_NODES: usize = 10;
/// Largest phase excursion λ-width × radius allowed on one panel.
const PANEL_PHASE: f64 = 8.0;
/// Largest L² mass fraction allowed in the outer 10% frame of the box.
pub const FRAME_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Low,
    High,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadNode {
    pub lambda: f64,
    /// Weight for ∫ f(λ) dλ.
    pub weight: f64,
    pub chi_low: f64,
    pub chi_high: f64,
    pub band: Band,
}

/// λ-quadrature for the stationary formula split at 2a.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub a: f64,
    pub support: (f64, f64),
    pub low_nodes: Vec<QuadNode>,
    pub high_nodes: Vec<QuadNode>,
    pub n_angles: usize,
    /// Output radius the panels are sized for.
    pub radius: f64,
    pub refinement: u32,
}

fn panels(a: f64, b: f64, width: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return vec![];
    }
    let count = ((b - a) / width).ceil().max(1.0) as usize;
    (0..count)
        .map(|k| {
            (
                a + (b - a) * k as f64 / count as f64,
                a + (b - a) * (k + 1) as f64 / count as f64,
            )
        })
        .collect()
}

impl QuadratureScheme {
    /// Nodes on the spectral support (lo, hi) of the input; `radius` is the largest |x| of interest.
    pub fn new(a: f64, support: (f64, f64), n_angles: usize, radius: f64) -> Result<Self> {
        Self::with_refinement(a, support, n_angles, radius, 0)
    }

    pub fn for_window(window: &BandWindow, a: f64, grid: &Grid2D) -> Result<Self> {
        Self::new(
            a,
            (window.alpha, window.beta),
            crate::grid::DEFAULT_ANGLES,
            grid.half_width * 2f64.sqrt(),
        )
    }

    fn with_refinement(a: f64, support: (f64, f64), n_angles: usize, radius: f64, refinement: u32) -> Result<Self> {
        let (lo, hi) = support;
        if !(a > 0.0) || !(lo > 0.0 && hi > lo) || !(radius > 0.0) {
            return Err(Error::Argument(format!(
                "invalid quadrature request a={a}, support=({lo}, {hi})"
            )));
        }
        let shrink = 0.5f64.powi(refinement as i32);
        let (xs, ws) = gauss_legendre(PANEL_NODES, -1.0, 1.0);
        let node = |lambda: f64, weight: f64, band: Band| QuadNode {
            lambda,
            weight,
            chi_low: chi_cutoff(lambda, 2.0 * a, CutoffSide::LeQ),
            chi_high: chi_cutoff(lambda, 2.0 * a, CutoffSide::Gt),
            band,
        };
        let mut low_nodes = vec![];
        let split = (2.0 * a).min(hi);
        if lo < split {
            // λ = e^{−τ}
            let (t0, t1) = (-split.ln(), -lo.ln());
            let dtau = (PANEL_PHASE / (radius * split)).min(0.5) * shrink;
            for (pa, pb) in panels(t0, t1, dtau) {
                let (m, r) = (0.5 * (pa + pb), 0.5 * (pb - pa));
                for (x, w) in xs.iter().zip(&ws) {
                    let lam = (-(m + r * x)).exp();
                    low_nodes.push(node(lam, w * r * lam, Band::Low));
                }
            }
        }
        let mut high_nodes = vec![];
        let start = lo.max(2.0 * a);
        if start < hi {
            let width = (PANEL_PHASE / radius).min(0.5) * shrink;
            for (pa, pb) in panels(start, hi, width) {
                let (m, r) = (0.5 * (pa + pb), 0.5 * (pb - pa));
                for (x, w) in xs.iter().zip(&ws) {
                    high_nodes.push(node(m + r * x, w * r, Band::High));
                }
            }
        }
        Ok(Self {
            a,
            support,
            low_nodes,
            high_nodes,
            n_angles,
            radius,
            refinement,
        })
    }

    /// Same bands with half the node spacing.
    pub fn refined(&self) -> Self {
        Self::with_refinement(self.a, self.support, self.n_angles, self.radius, self.refinement + 1)
            .expect("parameters were validated")
    }

    pub fn nodes(&self) -> impl Iterator<Item = &QuadNode> {
        self.low_nodes.iter().chain(&self.high_nodes)
    }

    pub fn id(&self) -> String {
        format!(
            "a{}-r{}-n{}",
            self.a,
            self.refinement,
            self.low_nodes.len() + self.high_nodes.len()
        )
    }
}

/// How M(λ)⁻¹ is applied at each node.
#[derive(Clone, Copy)]
pub enum InverseMode<'a> {
    DirectSolve,
    /// Expansion on the low band, direct solves on the high band.
    Expansion(&'a InverseExpansion),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    All,
    Low,
    High,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RejectedNode {
    pub lambda: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct StationaryResult {
    /// W₊u
    pub w_u: GridFunction,
    /// The subtracted integral restricted to χ_{≤2a} and χ_{>2a}.
    pub low: GridFunction,
    pub high: GridFunction,
    pub rejected: Vec<RejectedNode>,
}

/// Largest |x| at which |u| exceeds 10⁻¹⁰ max |u|.
fn support_radius(u: &GridFunction) -> f64 {
    let m = u.max_abs();
    (0..u.values.len())
        .filter(|&k| u.values[k].norm() > 1e-10 * m)
        .map(|k| {
            let (x, y) = u.grid.point(k);
            x.hypot(y)
        })
        .fold(0.0, f64::max)
}

fn active_radius(active: &ActiveSet) -> f64 {
    active.points().iter().map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max)
}

/// Per-node solver: weighted right-hand side v·Π(λ)u on the active set ↦ weighted source
/// coefficients whose product with v (or w) is convolved with 𝒢_{−λ}.
pub trait NodeSolver {
    fn solve(&self, lambda: f64, band: Band, active: &ActiveSet, rhs: &[c64]) -> Result<Vec<c64>>;
}

fn conj_apply(op: &DenseOperator, rhs: &[c64]) -> Vec<c64> {
    let x: Vec<c64> = rhs.iter().map(|z| z.conj()).collect();
    op.apply(&x).into_iter().map(|z| z.conj()).collect()
}

/// M(−λ)⁻¹ = 𝒞M(λ)⁻¹𝒞, paired with the incoming G₀(−λ).
struct DirectSolver;

impl NodeSolver for DirectSolver {
    fn solve(&self, lambda: f64, _: Band, active: &ActiveSet, rhs: &[c64]) -> Result<Vec<c64>> {
        let conj_rhs: Vec<c64> = rhs.iter().map(|z| z.conj()).collect();
        let x = build_m_on(lambda, active)?.solve_checked(&conj_rhs, "M(λ)")?;
        Ok(x.into_iter().map(|z| z.conj()).collect())
    }
}

struct ExpansionSolver<'a>(&'a InverseExpansion);

impl NodeSolver for ExpansionSolver<'_> {
    fn solve(&self, lambda: f64, band: Band, active: &ActiveSet, rhs: &[c64]) -> Result<Vec<c64>> {
        match band {
            Band::Low => Ok(conj_apply(&self.0.eval(lambda)?, rhs)),
            Band::High => DirectSolver.solve(lambda, band, active, rhs),
        }
    }
}

/// M(λ)⁻¹ replaced by U: the first Born term.
pub struct SignSolver;

impl NodeSolver for SignSolver {
    fn solve(&self, _: f64, _: Band, active: &ActiveSet, rhs: &[c64]) -> Result<Vec<c64>> {
        Ok(rhs.iter().zip(&active.sign).map(|(r, s)| r * s).collect())
    }
}

/// U(−vG₀(−λ)w)ʲ, so that v·U(…)·v = w(−vG₀(−λ)w)ʲv.
struct BornSolver(u32);

impl NodeSolver for BornSolver {
    fn solve(&self, lambda: f64, _: Band, active: &ActiveSet, rhs: &[c64]) -> Result<Vec<c64>> {
        let mut x = rhs.to_vec();
        if self.0 > 0 {
            let k = build_vg0w_deriv_on(lambda, 0, Branch::Incoming, active)?.scale(c64::new(-1.0, 0.0));
            for _ in 0..self.0 {
                x = k.apply(&x);
            }
        }
        Ok(x.iter().zip(&active.sign).map(|(r, s)| r * s).collect())
    }
}

/// Stationary W₊u = u − ∫ G₀(−λ)vM(−λ)⁻¹vΠ(λ)u λdλ.
pub fn w_stationary(
    pot: &Potential,
    u: &GridFunction,
    q: &QuadratureScheme,
    mode: InverseMode,
) -> Result<StationaryResult> {
    match mode {
        InverseMode::DirectSolve => w_stationary_with(pot, u, q, &DirectSolver),
        InverseMode::Expansion(e) => w_stationary_with(pot, u, q, &ExpansionSolver(e)),
    }
}

pub fn w_stationary_with(
    pot: &Potential,
    u: &GridFunction,
    q: &QuadratureScheme,
    solver: &dyn NodeSolver,
) -> Result<StationaryResult> {
    if u.space != Space::Physical || u.grid != pot.grid {
        return Err(Error::Argument(
            "u must be a physical-space function on the potential's grid".into(),
        ));
    }
    let grid = u.grid;
    if pot.is_zero() {
        let zero = GridFunction::zeros(grid);
        return Ok(StationaryResult {
            w_u: u.clone(),
            low: zero.clone(),
            high: zero,
            rejected: vec![],
        });
    }
    let active = factor_potential(pot).active()?;
    let points = active.points();
    let h = grid.h();
    let spectrum = Spectrum::new(u);
    let trace_radius = active_radius(&active) + support_radius(u);
    let (origin, side) = active.bounding_box();
    let mut low = vec![ZERO; grid.len()];
    let mut high = vec![ZERO; grid.len()];
    let mut rejected = vec![];
    for node in q.nodes() {
        let lam = node.lambda;
        let n_ang = angles_for(lam, trace_radius, q.n_angles);
        let trace = spectrum.circle(lam, n_ang);
        let pi_u = pi_lambda_at(&trace, lam, &points);
        let rhs: Vec<c64> = pi_u.iter().zip(&active.v).map(|(p, v)| p * v * h).collect();
        let coef = match solver.solve(lam, node.band, &active, &rhs) {
            Ok(c) => c,
            Err(e @ (Error::SingularBlock { .. } | Error::Singular)) => {
                rejected.push(RejectedNode {
                    lambda: lam,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut src = GridFunction::zeros(grid);
        for (a, &k) in active.nodes.iter().enumerate() {
            src.values[k] = coef[a] * active.v[a] / h;
        }
        let out = G0Convolver::for_sources(lam, 0, Branch::Incoming, grid, origin, side)?.apply(&src);
        let s = node.weight * lam;
        for (k, o) in out.values.iter().enumerate() {
            low[k] += o * (s * node.chi_low);
            high[k] += o * (s * node.chi_high);
        }
    }
    let low = GridFunction {
        grid,
        space: Space::Physical,
        values: low,
    };
    let high = GridFunction {
        grid,
        space: Space::Physical,
        values: high,
    };
    let w_u = u.sub(&low).sub(&high);
    Ok(StationaryResult {
        w_u,
        low,
        high,
        rejected,
    })
}

/// Selects one part of the subtracted stationary integral.
pub fn stationary_part(res: &StationaryResult, part: Part) -> GridFunction {
    match part {
        Part::All => res.low.add(&res.high),
        Part::Low => res.low.clone(),
        Part::High => res.high.clone(),
    }
}

/// j-th Born term ∫ G₀(−λ)w(−vG₀(−λ)w)ʲvΠ(λ)u χ_{>2a}(λ) λdλ of the high-energy part.
pub fn born_high_term(pot: &Potential, u: &GridFunction, j: u32, q: &QuadratureScheme) -> Result<GridFunction> {
    if j > 4 {
        return Err(Error::Truncation(format!(
            "Born term j = {j} > 4: use the stationary remainder instead"
        )));
    }
    Ok(w_stationary_with(pot, u, q, &BornSolver(j))?.high)
}

/// W₋ = 𝒞W₊𝒞⁻¹ with 𝒞 complex conjugation (V real).
pub fn w_minus(pot: &Potential, u: &GridFunction, q: &QuadratureScheme) -> Result<GridFunction> {
    Ok(w_stationary(pot, &u.conj(), q, InverseMode::DirectSolve)?.w_u.conj())
}

/// Good and bad parts of Π(λ)u(z) − Π(λ)u(0).
pub struct GoodBadSplit {
    lambda: f64,
    dirs: Vec<(f64, f64)>,
    trace: Vec<c64>,
    /// (1/2π)∫ω_l û(λω)dω
    dipole: [c64; 2],
    theta: (Vec<f64>, Vec<f64>),
}

impl GoodBadSplit {
    /// b̃(λ, z) = (iλ/2π)∫(z·ω)û(λω)dω
    pub fn bad(&self, z: (f64, f64)) -> c64 {
        c64::new(0.0, self.lambda) * (self.dipole[0] * z.0 + self.dipole[1] * z.1)
    }

    /// g̃(λ, z) = −(λ²/2π)∫(∫₀¹(1−θ)(z·ω)²e^{iλz·ωθ}dθ)û(λω)dω, θ-integral by Gauss–Legendre panels.
    pub fn good(&self, z: (f64, f64)) -> c64 {
        let lam = self.lambda;
        let reach = lam * z.0.hypot(z.1);
        let n_panels = (reach / 6.0).ceil().max(1.0) as usize;
        let (xs, ws) = &self.theta;
        let m = self.dirs.len() as f64;
        let mut acc = ZERO;
        for (&(c, s), &uh) in self.dirs.iter().zip(&self.trace) {
            let a = lam * (z.0 * c + z.1 * s);
            let mut inner = ZERO;
            for p in 0..n_panels {
                let (t0, t1) = (p as f64 / n_panels as f64, (p + 1) as f64 / n_panels as f64);
                let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
                for (x, w) in xs.iter().zip(ws) {
                    let th = mid + half * x;
                    inner += c64::from_polar(w * half * (1.0 - th), a * th);
                }
            }
            acc += inner * a * a * uh;
        }
        -acc / m
    }

    /// Π(λ)u(z) − Π(λ)u(0) from the same trace.
    pub fn difference(&self, z: (f64, f64)) -> c64 {
        let m = self.dirs.len() as f64;
        self.dirs
            .iter()
            .zip(&self.trace)
            .map(|(&(c, s), &uh)| uh * (c64::from_polar(1.0, self.lambda * (c * z.0 + s * z.1)) - 1.0))
            .sum::<c64>()
            / m
    }
}

/// Taylor split of Π(λ)u(z) − Π(λ)u(0) into g̃ (second-order remainder) and b̃ (linear in z).
pub fn split_good_bad(u: &GridFunction, lambda: f64, radius: f64) -> Result<GoodBadSplit> {
    if !(lambda > 0.0) || lambda > u.grid.nyquist() {
        return Err(Error::Domain(format!("λ = {lambda} outside (0, Nyquist]")));
    }
    let n_ang = angles_for(lambda, radius + support_radius(u), crate::grid::DEFAULT_ANGLES);
    let trace = Spectrum::new(u).circle(lambda, n_ang);
    let dirs = crate::grid::angles(n_ang);
    let m = n_ang as f64;
    let mut dipole = [ZERO; 2];
    for (&(c, s), &uh) in dirs.iter().zip(&trace) {
        dipole[0] += uh * c / m;
        dipole[1] += uh * s / m;
    }
    Ok(GoodBadSplit {
        lambda,
        dirs,
        trace,
        dipole,
        theta: gauss_legendre(16, -1.0, 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KMethod {
    LambdaQuadrature,
    RadialPV,
}

/// Grid points grouped by radius (keyed by the exact squared index distance).
struct RadialIndex {
    radii: Vec<f64>,
    of_node: Vec<usize>,
}

impl RadialIndex {
    fn new(grid: &Grid2D) -> Self {
        let n = grid.n as i64;
        let mut key_to: HashMap<i64, usize> = HashMap::new();
        let mut radii = vec![];
        let mut of_node = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (2 * i - n + 1, 2 * j - n + 1);
                let key = a * a + b * b;
                let idx = *key_to.entry(key).or_insert_with(|| {
                    radii.push(0.5 * grid.h() * (key as f64).sqrt());
                    radii.len() - 1
                });
                of_node.push(idx);
            }
        }
        Self { radii, of_node }
    }

    fn radial_sums(&self, u: &GridFunction) -> Vec<c64> {
        let mut s = vec![ZERO; self.radii.len()];
        for (k, &r) in self.of_node.iter().enumerate() {
            s[r] += u.values[k];
        }
        s
    }

    fn expand(&self, grid: Grid2D, f: &[c64]) -> GridFunction {
        GridFunction {
            grid,
            space: Space::Physical,
            values: self.of_node.iter().map(|&r| f[r]).collect(),
        }
    }
}

/// Spectral band [lo, hi] of u: radii where |û| exceeds 10⁻¹⁰ of its maximum.
fn spectral_band(u: &GridFunction) -> (f64, f64, bool) {
    let uh = fourier_forward(u);
    let g = u.grid;
    let m = uh.max_abs();
    let n = g.n;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut near_nyquist = false;
    for k1 in 0..n {
        for k2 in 0..n {
            if uh.values[k1 * n + k2].norm() > 1e-10 * m {
                let r = g.freq(k1).hypot(g.freq(k2));
                lo = lo.min(r);
                hi = hi.max(r);
                if g.freq(k1).abs().max(g.freq(k2).abs()) >= 0.9 * g.nyquist() {
                    near_nyquist = true;
                }
            }
        }
    }
    (lo, hi, near_nyquist)
}

/// Gauss–Legendre nodes on [lo, hi] in panels of width ≤ `width`, geometrically graded toward 0 when lo = 0.
fn lambda_nodes(lo: f64, hi: f64, width: f64) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(PANEL_NODES, -1.0, 1.0);
    let mut out = vec![];
    let mut push = |a: f64, b: f64| {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in xs.iter().zip(&ws) {
            out.push((m + r * x, w * r));
        }
    };
    let mut start = lo;
    if lo == 0.0 {
        let first = width.min(hi);
        let mut b = first;
        for _ in 0..40 {
            push(0.5 * b, b);
            b *= 0.5;
        }
        start = first;
    }
    for (a, b) in panels(start, hi, width) {
        push(a, b);
    }
    out
}

/// The operator K: Ku(x) = ∫ 𝒢_{−λ}(|x|) Ū(λ) λ dλ with Ū the angular mean of û on |ξ| = λ,
/// or equivalently −(1/4π)[PV∫ ū(ρ)/(|x|² − ρ) dρ + iπ ū(|x|²)] with ū the angular mean of u on |y|² = ρ.
pub fn k_operator(u: &GridFunction, method: KMethod) -> Result<GridFunction> {
    if u.space != Space::Physical {
        return Err(Error::Argument("K acts on physical-space functions".into()));
    }
    let grid = u.grid;
    let (lo, hi, near_nyquist) = spectral_band(u);
    if u.max_abs() == 0.0 {
        return Ok(GridFunction::zeros(grid));
    }
    if method == KMethod::LambdaQuadrature && near_nyquist {
        return Err(Error::Domain(
            "input spectrum reaches the Nyquist band; K needs a band-limited input".into(),
        ));
    }
    let index = RadialIndex::new(&grid);
    let sums = index.radial_sums(u);
    let h2 = grid.h().powi(2);
    let r_out = grid.half_width * 2f64.sqrt();
    let dxi = grid.dxi();
    let band_lo = if lo <= 1.5 * dxi { 0.0 } else { lo - dxi };
    let band_hi = (hi + dxi).min(grid.nyquist() * 2f64.sqrt());
    let nodes = lambda_nodes(band_lo, band_hi, PANEL_PHASE / r_out);
    // Ū(λ) = (h²/2π) Σ u(x) J₀(λ|x|)
    let u_bar: Vec<c64> = nodes
        .iter()
        .map(|&(lam, _)| {
            index
                .radii
                .iter()
                .zip(&sums)
                .map(|(&r, &s)| s * bessel_j0(lam * r))
                .sum::<c64>()
                * (h2 / (2.0 * PI))
        })
        .collect();
    let values: Vec<c64> = match method {
        KMethod::LambdaQuadrature => index
            .radii
            .iter()
            .map(|&r| {
                nodes
                    .iter()
                    .zip(&u_bar)
                    .map(|(&(lam, w), &ub)| {
                        resolvent_kernel(lam, r, Branch::Incoming).expect("λ, r > 0") * ub * (w * lam)
                    })
                    .sum()
            })
            .collect(),
        KMethod::RadialPV => {
            let radial_mean = |s: f64| -> c64 {
                nodes
                    .iter()
                    .zip(&u_bar)
                    .map(|(&(lam, w), &ub)| ub * (bessel_j0(lam * s) * lam * w))
                    .sum()
            };
            let s_max = 1.25 * r_out;
            let s_nodes = lambda_nodes(0.0, s_max, PANEL_PHASE / band_hi.max(1e-3) / 2.0);
            let s_vals: Vec<c64> = s_nodes.iter().map(|&(s, _)| radial_mean(s)).collect();
            let rho_max = s_max * s_max;
            index
                .radii
                .iter()
                .map(|&r| {
                    let ur = radial_mean(r);
                    let rho = r * r;
                    // PV∫₀^{ρmax} ū(ρ')/(ρ − ρ') dρ' with ρ' = s², subtracting ū(ρ)
                    let smooth: c64 = s_nodes
                        .iter()
                        .zip(&s_vals)
                        .map(|(&(s, w), &us)| {
                            let d = rho - s * s;
                            if d.abs() < 1e-14 * rho_max {
                                ZERO
                            } else {
                                (us - ur) * (2.0 * s * w / d)
                            }
                        })
                        .sum();
                    let pv = smooth + ur * (rho / (rho_max - rho)).ln();
                    -(pv + c64::new(0.0, PI) * ur) / (4.0 * PI)
                })
                .collect()
        }
    };
    Ok(index.expand(grid, &values))
}

/// Family u_k(x) = u₀(x/s_k) with spectra pushed toward λ → 0 as s_k grows.
#[derive(Clone, Debug)]
pub struct DilationFamily {
    pub base: GridFunction,
    pub window: BandWindow,
    pub scales: Vec<f64>,
}

/// Largest member grid the probe will allocate.
pub const MAX_MEMBER_N: usize = 4096;

/// Coarse spacing bound h·β_s: keeps |f|ᵖ resolved by the midpoint rule away from the fine box.
const COARSE_RESOLUTION: f64 = 0.125;

/// A function on a coarse grid whose central box is refined to a fine grid with aligned cells.
/// Coarse cells inside the fine box hold block averages of the fine values.
#[derive(Clone, Debug)]
pub struct CompositeField {
    pub coarse: GridFunction,
    pub fine: GridFunction,
}

impl CompositeField {
    fn ratio(&self) -> usize {
        (self.coarse.grid.h() / self.fine.grid.h()).round() as usize
    }

    /// First coarse index covered by the fine box.
    fn offset(&self) -> usize {
        (self.coarse.grid.n - self.fine.grid.n / self.ratio()) / 2
    }

    fn in_fine_box(&self, i: usize, j: usize) -> bool {
        let (off, span) = (self.offset(), self.fine.grid.n / self.ratio());
        (off..off + span).contains(&i) && (off..off + span).contains(&j)
    }

    fn fill_blocks(&mut self) {
        let (r, off, nf, nc) = (self.ratio(), self.offset(), self.fine.grid.n, self.coarse.grid.n);
        for bi in 0..nf / r {
            for bj in 0..nf / r {
                let mut acc = ZERO;
                for a in 0..r {
                    for b in 0..r {
                        acc += self.fine.values[(bi * r + a) * nf + bj * r + b];
                    }
                }
                self.coarse.values[(bi + off) * nc + bj + off] = acc / (r * r) as f64;
            }
        }
    }

    /// ‖f‖_p with fine cells inside the box and coarse cells outside it.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p > 1.0) || p.is_infinite() {
            return Err(Error::Argument(format!("p = {p} must be finite and exceed 1")));
        }
        let nc = self.coarse.grid.n;
        let outer: f64 = (0..nc * nc)
            .filter(|&k| !self.in_fine_box(k / nc, k % nc))
            .map(|k| self.coarse.values[k].norm().powf(p))
            .sum();
        let inner: f64 = self.fine.values.iter().map(|v| v.norm().powf(p)).sum();
        Ok((outer * self.coarse.cell_area() + inner * self.fine.cell_area()).powf(1.0 / p))
    }
}

impl DilationFamily {
    pub fn new(base: GridFunction, window: BandWindow, scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() || scales.windows(2).any(|w| !(w[1] > w[0])) || scales[0] <= 0.0 {
            return Err(Error::Argument(
                "scales must be positive and strictly increasing".into(),
            ));
        }
        if base.space != Space::Physical {
            return Err(Error::Argument("family base must be a physical-space function".into()));
        }
        Ok(Self { base, window, scales })
    }

    /// Member k, u(x/s_k): on the base grid near the origin and on the smallest coarse grid
    /// that passes the frame check elsewhere.
    pub fn member(&self, k: usize) -> Result<CompositeField> {
        let s = self.scales[k];
        let g = self.base.grid;
        let beta = self.window.beta / s;
        let mut r = 1;
        while g.n.is_multiple_of(4 * r) && 2.0 * r as f64 * g.h() * beta <= COARSE_RESOLUTION {
            r *= 2;
        }
        let hc = r as f64 * g.h();
        let mut n = g.n / r;
        while n <= MAX_MEMBER_N {
            let grid = Grid2D::new(n, 0.5 * n as f64 * hc)?;
            let (coarse, samples) = self.member_on(s, grid);
            if frame_fraction(&coarse) <= FRAME_TOL {
                let fine = if r == 1 {
                    crop(&coarse, g)
                } else {
                    eval_spectrum(&samples, grid.dxi(), g)
                };
                let mut field = CompositeField { coarse, fine };
                field.fill_blocks();
                return Ok(field);
            }
            n *= 2;
        }
        Err(Error::UnderResolved(format!(
            "member with scale {s} needs a grid larger than n = {MAX_MEMBER_N}; reduce the largest scale"
        )))
    }

    /// s²û(sξ) on the grid's frequency lattice, inverted there; also returns the nonzero samples.
    fn member_on(&self, s: f64, grid: Grid2D) -> (GridFunction, Vec<(f64, f64, c64)>) {
        let spec = Spectrum::new(&self.base);
        let reach = spectral_radius(&self.base);
        let xi = grid.freqs();
        let n = grid.n;
        let mut hat = GridFunction {
            grid,
            space: Space::Frequency,
            values: vec![ZERO; n * n],
        };
        let mut samples = vec![];
        let same = s == 1.0 && grid == self.base.grid;
        let base_hat = if same { Some(fourier_forward(&self.base)) } else { None };
        for (k1, &a) in xi.iter().enumerate() {
            for (k2, &b) in xi.iter().enumerate() {
                if s * a.hypot(b) <= reach {
                    let v = if let Some(bh) = &base_hat {
                        bh.values[k1 * n + k2]
                    } else {
                        spec.eval(s * a, s * b) * (s * s)
                    };
                    hat.values[k1 * n + k2] = v;
                    samples.push((a, b, v));
                }
            }
        }
        (fourier_inverse(&hat), samples)
    }

    /// û of member k on the circle of radius λ.
    fn member_trace(&self, spec: &Spectrum, k: usize, lambda: f64, n_angles: usize) -> Vec<c64> {
        let s = self.scales[k];
        spec.circle(s * lambda, n_angles)
            .into_iter()
            .map(|z| z * (s * s))
            .collect()
    }

    /// Spectral support of member k.
    pub fn support(&self, k: usize) -> (f64, f64) {
        (self.window.alpha / self.scales[k], self.window.beta / self.scales[k])
    }
}

/// Σ û(ξ)e^{iξ·x} dξ²/2π over the given frequency samples, on every point of `grid`.
fn eval_spectrum(samples: &[(f64, f64, c64)], dxi: f64, grid: Grid2D) -> GridFunction {
    let x = grid.coords();
    let n = grid.n;
    let mut out = vec![ZERO; n * n];
    let scale = dxi * dxi / (2.0 * PI);
    for &(a, b, v) in samples {
        let e1: Vec<c64> = x.iter().map(|&xv| v * scale * c64::from_polar(1.0, a * xv)).collect();
        let e2: Vec<c64> = x.iter().map(|&yv| c64::from_polar(1.0, b * yv)).collect();
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for (o, &w) in row.iter_mut().zip(&e2) {
                *o += e1[i] * w;
            }
        }
    }
    GridFunction {
        grid,
        space: Space::Physical,
        values: out,
    }
}

/// Largest |ξ| at which |û| exceeds 10⁻¹³ max |û|.
fn spectral_radius(u: &GridFunction) -> f64 {
    let hat = fourier_forward(u);
    let g = u.grid;
    let xi = g.freqs();
    let m = hat.max_abs();
    hat.values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 1e-13 * m)
        .map(|(k, _)| xi[k / g.n].hypot(xi[k % g.n]))
        .fold(0.0, f64::max)
}

/// Radial profiles F_m(r) = Σ_nodes c·d_m·conj 𝓗_m(λr), m = −m_max..=m_max, on a uniform grid in r.
struct MultipoleField {
    r0: f64,
    dr: f64,
    m_max: usize,
    profiles: Vec<Vec<c64>>,
}

impl MultipoleField {
    fn new(r_inner: f64, r_outer: f64, dr: f64, m_max: usize) -> Self {
        let r0 = r_inner - dr;
        let samples = ((r_outer - r0) / dr).ceil() as usize + 3;
        Self {
            r0,
            dr,
            m_max,
            profiles: vec![vec![ZERO; samples]; 2 * m_max + 1],
        }
    }

    /// Adds c·Σ_m d_m conj 𝓗_m(λr)e^{−imθ}, with d indexed m + m_node.
    fn add(&mut self, lambda: f64, c: f64, d: &[c64]) {
        let m_node = (d.len() - 1) / 2;
        for j in 0..self.profiles[0].len() {
            let r = self.r0 + j as f64 * self.dr;
            let h = hankel_orders(lambda * r, m_node);
            for m in 0..=m_node {
                let hc = h[m].conj() * c;
                self.profiles[self.m_max + m][j] += d[m_node + m] * hc;
                if m > 0 {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    self.profiles[self.m_max - m][j] += d[m_node - m] * hc * sign;
                }
            }
        }
    }

    fn eval(&self, x: f64, y: f64) -> c64 {
        let r = x.hypot(y);
        let t = (r - self.r0) / self.dr;
        let i = (t.floor() as usize).clamp(1, self.profiles[0].len() - 3);
        let f = t - i as f64;
        // 4-point Lagrange weights on i−1..=i+2
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        let at = |m: usize| -> c64 { (0..4).map(|q| self.profiles[m][i - 1 + q] * w[q]).sum() };
        let rot = c64::new(x / r, -y / r);
        let mut acc = at(self.m_max);
        let (mut up, mut down) = (c64::new(1.0, 0.0), c64::new(1.0, 0.0));
        for m in 1..=self.m_max {
            up *= rot;
            down *= rot.conj();
            acc += at(self.m_max + m) * up + at(self.m_max - m) * down;
        }
        acc
    }
}

/// Truncation of the addition theorem: terms decay like (r_source/r)^m beyond m ≈ λ r_source.
const MULTIPOLE_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct MemberResult {
    pub u: CompositeField,
    pub w_u: CompositeField,
    pub rejected: Vec<RejectedNode>,
}

/// W₊ applied to family member k. The subtracted integral is convolved on the potential's grid
/// and expanded in incoming multipoles on the coarse cells outside it.
pub fn w_stationary_member(
    pot: &Potential,
    family: &DilationFamily,
    k: usize,
    q: &QuadratureScheme,
) -> Result<MemberResult> {
    let fine_grid = family.base.grid;
    if fine_grid != pot.grid {
        return Err(Error::Argument("family base must live on the potential's grid".into()));
    }
    let u = family.member(k)?;
    if pot.is_zero() {
        return Ok(MemberResult {
            w_u: u.clone(),
            u,
            rejected: vec![],
        });
    }
    let active = factor_potential(pot).active()?;
    let points = active.points();
    let h = fine_grid.h();
    let r_source = active_radius(&active);
    let r_split = fine_grid.half_width;
    if r_source > 0.7 * r_split {
        return Err(Error::UnderResolved(format!(
            "potential support radius {r_source:.2} too close to the box edge {r_split:.2}; enlarge the potential grid"
        )));
    }
    let m_extra = (MULTIPOLE_TOL.ln() / (r_source / r_split).ln()).ceil() as usize;
    let lam_top = q.nodes().map(|n| n.lambda).fold(0.0, f64::max);
    let m_max = (lam_top * r_source).ceil() as usize + m_extra;
    let coarse_grid = u.coarse.grid;
    let mut far = MultipoleField::new(r_split, coarse_grid.half_width * 2f64.sqrt(), 0.1 / lam_top, m_max);
    let polar: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.hypot(*y), y.atan2(*x))).collect();
    let spec = Spectrum::new(&family.base);
    let trace_radius = r_source + family.scales[k] * support_radius(&family.base);
    let (origin, side) = active.bounding_box();
    let mut near = vec![ZERO; fine_grid.len()];
    let mut rejected = vec![];
    for node in q.nodes() {
        let lam = node.lambda;
        let trace = family.member_trace(&spec, k, lam, angles_for(lam, trace_radius, q.n_angles));
        let pi_u = pi_lambda_at(&trace, lam, &points);
        let rhs: Vec<c64> = pi_u.iter().zip(&active.v).map(|(p, v)| p * v * h).collect();
        let coef = match DirectSolver.solve(lam, node.band, &active, &rhs) {
            Ok(c) => c,
            Err(e @ (Error::SingularBlock { .. } | Error::Singular)) => {
                rejected.push(RejectedNode {
                    lambda: lam,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let weight = node.weight * lam;
        let mut src = GridFunction::zeros(fine_grid);
        for (a, &idx) in active.nodes.iter().enumerate() {
            src.values[idx] = coef[a] * active.v[a] / h;
        }
        let out = G0Convolver::for_sources(lam, 0, Branch::Incoming, fine_grid, origin, side)?.apply(&src);
        near.iter_mut().zip(&out.values).for_each(|(acc, o)| *acc += o * weight);
        let m_node = ((lam * r_source).ceil() as usize + m_extra).min(m_max);
        let mut d = vec![ZERO; 2 * m_node + 1];
        for (a, &(rho, phi)) in polar.iter().enumerate() {
            let amp = coef[a] * active.v[a] * h;
            let j = bessel_j_orders(lam * rho, m_node);
            let step = c64::from_polar(1.0, phi);
            let mut e = c64::new(1.0, 0.0);
            for (m, &jm) in j.iter().enumerate() {
                d[m_node + m] += amp * jm * e;
                if m > 0 {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    d[m_node - m] += amp * (jm * sign) * e.conj();
                }
                e *= step;
            }
        }
        far.add(lam, weight, &d);
    }
    let mut w_u = u.clone();
    w_u.fine.values.iter_mut().zip(&near).for_each(|(w, s)| *w -= s);
    let nc = coarse_grid.n;
    for idx in 0..nc * nc {
        if !w_u.in_fine_box(idx / nc, idx % nc) {
            let (x, y) = coarse_grid.point(idx);
            w_u.coarse.values[idx] -= far.eval(x, y);
        }
    }
    w_u.fill_blocks();
    Ok(MemberResult { u, w_u, rejected })
}

/// Fraction of L² mass in the outer 10% frame.
pub fn frame_fraction(u: &GridFunction) -> f64 {
    let lim = 0.9 * u.grid.half_width;
    let (mut tail, mut total) = (0.0, 0.0);
    for (k, v) in u.values.iter().enumerate() {
        let (x, y) = u.grid.point(k);
        let m = v.norm_sqr();
        total += m;
        if x.abs().max(y.abs()) > lim {
            tail += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Band-limited test packet: the window projection of a Gaussian (radial) or x₁·Gaussian (dipole).
pub fn band_limited_packet(grid: Grid2D, window: &BandWindow, width: f64, dipole: bool) -> GridFunction {
    let f = GridFunction::from_real_fn(grid, |x, y| {
        let g = (-(x * x + y * y) / (width * width)).exp();
        if dipole {
            x / width * g
        } else {
            g
        }
    });
    dstar_project(&f, window)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRow {
    pub family_index: usize,
    pub scale: f64,
    pub p: f64,
    pub ratio: f64,
    pub quadrature_id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeResult {
    pub rows: Vec<ProbeRow>,
    pub rejected: Vec<RejectedNode>,
}

impl ProbeResult {
    pub fn ratios(&self, p: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.p == p).map(|r| r.ratio).collect()
    }

    /// max/min ratio over the family at exponent p.
    pub fn spread(&self, p: f64) -> f64 {
        let r = self.ratios(p);
        r.iter().cloned().fold(0.0, f64::max) / r.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// last/first ratio at exponent p.
    pub fn growth(&self, p: f64) -> f64 {
        let r = self.ratios(p);
        r[r.len() - 1] / r[0]
    }
}

/// rₙ = ‖W₊uₙ‖ₚ/‖uₙ‖ₚ over the family for each p.
pub fn lp_growth_probe(pot: &Potential, ps: &[f64], family: &DilationFamily, a: f64) -> Result<ProbeResult> {
    let mut rows = vec![];
    let mut rejected = vec![];
    for k in 0..family.scales.len() {
        let grid = family.member(k)?.coarse.grid;
        let support = family.support(k);
        if support.0 < 0.5 * grid.dxi() {
            return Err(Error::UnderResolved(format!(
                "member {k} has spectrum down to {:.3e}, below the box resolution {:.3e}; enlarge the base grid",
                support.0,
                grid.dxi()
            )));
        }
        let q = QuadratureScheme::new(a, support, crate::grid::DEFAULT_ANGLES, grid.half_width * 2f64.sqrt())?;
        let res = w_stationary_member(pot, family, k, &q)?;
        rejected.extend(res.rejected.iter().cloned());
        for &p in ps {
            rows.push(ProbeRow {
                family_index: k,
                scale: family.scales[k],
                p,
                ratio: res.w_u.lp_norm(p)? / res.u.lp_norm(p)?,
                quadrature_id: q.id(),
            });
        }
    }
    Ok(ProbeResult { rows, rejected })
}

#[derive(Clone, Debug)]
pub struct TimeEvolution {
    pub times: Vec<f64>,
    pub outputs: Vec<GridFunction>,
    /// ‖out(t_{k+1}) − out(t_k)‖₂
    pub increments: Vec<f64>,
    pub dt: f64,
}

/// Embeds u in a grid `pad` times larger with the same spacing.
fn embed(u: &GridFunction, big: Grid2D) -> GridFunction {
    let (n, nb) = (u.grid.n, big.n);
    let off = (nb - n) / 2;
    let mut out = GridFunction::zeros(big);
    for i in 0..n {
        for j in 0..n {
            out.values[(i + off) * nb + j + off] = u.values[i * n + j];
        }
    }
    out
}

fn crop(u: &GridFunction, small: Grid2D) -> GridFunction {
    let (n, nb) = (small.n, u.grid.n);
    let off = (nb - n) / 2;
    let mut out = GridFunction::zeros(small);
    for i in 0..n {
        for j in 0..n {
            out.values[i * n + j] = u.values[(i + off) * nb + j + off];
        }
    }
    out
}

/// Spectral propagator e^{−iτ|ξ|²} applied on the periodic grid.
fn free_step(values: &mut [c64], grid: &Grid2D, tau: f64) {
    let n = grid.n;
    fft2(values, n, n, false);
    let f = grid.freqs();
    for k1 in 0..n {
        for k2 in 0..n {
            values[k1 * n + k2] *= c64::from_polar(1.0, -tau * (f[k1] * f[k1] + f[k2] * f[k2]));
        }
    }
    fft2(values, n, n, true);
    let s = 1.0 / (n * n) as f64;
    values.iter_mut().for_each(|v| *v *= s);
}

/// e^{−itH₀}u on the grid.
pub fn free_evolve(u: &GridFunction, t: f64) -> GridFunction {
    let mut out = u.clone();
    free_step(&mut out.values, &u.grid, t);
    out
}

/// e^{−itH}ψ by Strang splitting e^{−iτV/2}e^{−iτH₀}e^{−iτV/2}; negative t runs backward.
pub fn evolve(pot_values: &[f64], psi: &GridFunction, t: f64, dt: f64) -> GridFunction {
    let steps = (t.abs() / dt).ceil().max(1.0) as usize;
    let tau = t / steps as f64;
    let half: Vec<c64> = pot_values
        .iter()
        .map(|&v| c64::from_polar(1.0, -0.5 * tau * v))
        .collect();
    let mut vals = psi.values.clone();
    for _ in 0..steps {
        vals.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
        free_step(&mut vals, &psi.grid, tau);
        vals.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
    }
    GridFunction {
        values: vals,
        ..psi.clone()
    }
}

fn default_dt(pot: &Potential, u: &GridFunction) -> f64 {
    let (_, hi, _) = spectral_band(u);
    let vmax = pot.max_abs().max(1e-300);
    (0.1 / vmax).min(0.5 / hi.max(1e-300).powi(2)).min(0.05)
}

/// e^{itH}e^{−itH₀}u for each t, evolved on a grid `pad` times larger with the same spacing.
pub fn w_time_dependent(
    pot: &Potential,
    u: &GridFunction,
    t_list: &[f64],
    dt: Option<f64>,
    pad: usize,
) -> Result<TimeEvolution> {
    if !pad.is_power_of_two() {
        return Err(Error::Argument("pad must be a power of two".into()));
    }
    let grid = u.grid;
    let big = Grid2D::new(grid.n * pad, grid.half_width * pad as f64)?;
    let dt = dt.unwrap_or_else(|| default_dt(pot, u));
    let v_big: Vec<f64> = {
        let vg = embed(&pot.to_grid_function(), big);
        vg.values.iter().map(|v| v.re).collect()
    };
    let u_big = embed(u, big);
    let mut outputs = vec![];
    for &t in t_list {
        let psi = free_evolve(&u_big, t);
        if frame_fraction(&psi) > FRAME_TOL {
            return Err(Error::Truncation(format!(
                "free packet reaches the boundary by t = {t}; increase pad"
            )));
        }
        let back = evolve(&v_big, &psi, -t, dt);
        outputs.push(crop(&back, grid));
    }
    let increments = outputs.windows(2).map(|w| w[1].sub(&w[0]).norm_l2()).collect();
    Ok(TimeEvolution {
        times: t_list.to_vec(),
        outputs,
        increments,
        dt,
    })
}

/// ‖e^{−itH}W₊u − W₊e^{−itH₀}u‖₂/‖u‖₂ with both wave-operator applications stationary.
pub fn intertwining_residual(
    pot: &Potential,
    u: &GridFunction,
    q: &QuadratureScheme,
    t: f64,
    pad: usize,
) -> Result<f64> {
    let wu = w_stationary(pot, u, q, InverseMode::DirectSolve)?.w_u;
    let grid = u.grid;
    let big = Grid2D::new(grid.n * pad, grid.half_width * pad as f64)?;
    let v_big: Vec<f64> = embed(&pot.to_grid_function(), big)
        .values
        .iter()
        .map(|v| v.re)
        .collect();
    let dt = default_dt(pot, u);
    let lhs = crop(&evolve(&v_big, &embed(&wu, big), t, dt), grid);
    let free = crop(&free_evolve(&embed(u, big), t), grid);
    let rhs = w_stationary(pot, &free, q, InverseMode::DirectSolve)?.w_u;
    Ok(lhs.sub(&rhs).norm_l2() / u.norm_l2())
}

/// Dense check helper: applies an operator in weighted coordinates to a grid function supported on the active set.
pub fn apply_on_active(op: &DenseOperator, active: &ActiveSet, f: &GridFunction) -> GridFunction {
    let x = active.to_coords(f);
    active.from_coords(&op.apply(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_partitions_unity() {
        let q = QuadratureScheme::new(0.25, (0.1, 2.0), 64, 20.0).unwrap();
        for n in q.nodes() {
            assert!((n.chi_low + n.chi_high - 1.0).abs() < 1e-15);
        }
        // ∫ λ dλ over the support
        let s: f64 = q.nodes().map(|n| n.weight * n.lambda).sum();
        assert!((s - (4.0 - 0.01) / 2.0).abs() < 1e-12);
        let r = q.refined();
        assert!(r.low_nodes.len() + r.high_nodes.len() > q.low_nodes.len() + q.high_nodes.len());
    }

    #[test]
    fn zero_potential_is_identity() {
        let grid = Grid2D::new(32, 8.0).unwrap();
        let w = BandWindow::new(0.5, 2.0, &grid).unwrap();
        let u = band_limited_packet(grid, &w, 1.0, false);
        let q = QuadratureScheme::for_window(&w, 0.5, &grid).unwrap();
        let out = w_stationary(&Potential::zero(grid), &u, &q, InverseMode::DirectSolve).unwrap();
        assert_eq!(out.w_u.values, u.values);
    }

    #[test]
    fn born_index_limit() {
        let grid = Grid2D::new(32, 8.0).unwrap();
        let q = QuadratureScheme::new(0.5, (0.5, 2.0), 64, 10.0).unwrap();
        let u = GridFunction::zeros(grid);
        assert!(matches!(
            born_high_term(&Potential::zero(grid), &u, 5, &q),
            Err(Error::Truncation(_))
        ));
    }
}
