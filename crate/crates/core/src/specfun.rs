//! Hankel-based free-resolvent kernel in two dimensions and its threshold pieces.
//!
//! `hankel_h0(λ, j)` is the j-th derivative of (i/4)H₀⁽¹⁾(λ). Below the crossover
//! the power series is summed; above it the Laguerre-weighted integral
//! representation is used.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gauss_laguerre_inv_sqrt, gauss_legendre};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Small/large argument switch point.
pub const CROSSOVER: f64 = 2.0;
pub const LAGUERRE_NODES: usize = 64;
/// Above this value of λh the self-cell average is integrated directly.
const CELL_SERIES_LIMIT: f64 = 4.0;

const I: c64 = c64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SmallArg,
    LargeArg,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub regime: Regime,
}

impl SpectralPoint {
    pub fn new(lambda: f64) -> Result<Self> {
        check_positive(lambda)?;
        let regime = if lambda <= CROSSOVER {
            Regime::SmallArg
        } else {
            Regime::LargeArg
        };
        Ok(Self { lambda, regime })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Outgoing,
    Incoming,
}

impl Branch {
    pub fn apply(self, z: c64) -> c64 {
        match self {
            Branch::Outgoing => z,
            Branch::Incoming => z.conj(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StaticKind {
    N0,
    G1,
    G2,
}

fn check_positive(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("λ must be positive and finite, got {lambda}")))
    }
}

fn check_order(order: u32) -> Result<()> {
    if order <= 2 {
        Ok(())
    } else {
        Err(Error::Argument(format!("derivative order {order} not in {{0, 1, 2}}")))
    }
}

/// g(λ) = −(1/2π)log(λ/2) + i/4 − γ/(2π)
pub fn g_threshold(lambda: f64) -> Result<c64> {
    check_positive(lambda)?;
    Ok(g_unchecked(lambda))
}

pub(crate) fn g_unchecked(lambda: f64) -> c64 {
    c64::new(-(lambda / 2.0).ln() / (2.0 * PI) - EULER_GAMMA / (2.0 * PI), 0.25)
}

/// j-th λ-derivative of g.
pub(crate) fn g_deriv(lambda: f64, order: u32) -> c64 {
    match order {
        0 => g_unchecked(lambda),
        1 => c64::new(-1.0 / (2.0 * PI * lambda), 0.0),
        _ => c64::new(1.0 / (2.0 * PI * lambda * lambda), 0.0),
    }
}

pub fn hankel_h0(lambda: f64, order: u32) -> Result<c64> {
    check_positive(lambda)?;
    check_order(order)?;
    Ok(hankel_unchecked(lambda, order))
}

pub(crate) fn hankel_unchecked(z: f64, order: u32) -> c64 {
    if z <= CROSSOVER {
        hankel_series(z, order)
    } else if z < ASYMPTOTIC_FROM {
        hankel_integral(z, order)
    } else {
        hankel_asymptotic(z, order)
    }
}

/// Beyond this argument the Hankel asymptotic series reaches machine precision.
const ASYMPTOTIC_FROM: f64 = 25.0;

/// Asymptotic (Hankel) series for large z; only meaningful for z ≳ 20.
pub fn hankel_asymptotic(z: f64, order: u32) -> c64 {
    // H_ν⁽¹⁾(z) ~ √(2/πz) e^{i(z − νπ/2 − π/4)} Σ_k i^k a_k(ν)/z^k
    let h = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut term = c64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..60 {
            let kf = k as f64;
            let next = term * I * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
            if next.norm() > term.norm() {
                break;
            }
            term = next;
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        (2.0 / (PI * z)).sqrt() * c64::from_polar(1.0, z - nu * PI / 2.0 - PI / 4.0) * sum
    };
    let quarter_i = 0.25 * I;
    match order {
        0 => quarter_i * h(0.0),
        1 => -quarter_i * h(1.0),
        _ => quarter_i * (-h(0.0) + h(1.0) / z),
    }
}

/// Power-series branch: 𝓗(z) = g(z)J₀(z) − S(z)/(2π),
/// S(z) = Σ_{k≥1} (−1)^{k+1} H_k (z/2)^{2k}/(k!)².
pub fn hankel_series(z: f64, order: u32) -> c64 {
    let x = z * z / 4.0;
    // derivative weights of z^{2k}: d^m/dz^m z^{2k} = c_m(k) z^{2k-m}
    let weight = |k: f64, m: u32| match m {
        0 => 1.0,
        1 => 2.0 * k / z,
        _ => 2.0 * k * (2.0 * k - 1.0) / (z * z),
    };
    let mut j = [1.0, 0.0, 0.0];
    let mut s = [0.0; 3];
    let mut t = 1.0;
    let mut harmonic = 0.0;
    for k in 1..400 {
        let kf = k as f64;
        t *= x / (kf * kf);
        harmonic += 1.0 / kf;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut small = true;
        for m in 0..=order as usize {
            let w = weight(kf, m as u32);
            let dj = sign * t * w;
            let ds = -sign * harmonic * t * w;
            j[m] += dj;
            s[m] += ds;
            let scale = j[m].abs().max(s[m].abs()).max(f64::MIN_POSITIVE);
            if dj.abs().max(ds.abs()) >= 1e-16 * scale {
                small = false;
            }
        }
        if small {
            break;
        }
    }
    let g = |m: u32| g_deriv(z, m);
    let inv2pi = 1.0 / (2.0 * PI);
    match order {
        0 => g(0) * j[0] - s[0] * inv2pi,
        1 => g(1) * j[0] + g(0) * j[1] - s[1] * inv2pi,
        _ => g(2) * j[0] + 2.0 * g(1) * j[1] + g(0) * j[2] - s[2] * inv2pi,
    }
}

fn laguerre() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_laguerre_inv_sqrt(LAGUERRE_NODES))
}

/// Integral branch: 𝓗(z) = e^{iz} c ∫ e^{-t} t^{-1/2} (t/2 − iz)^{-1/2} dt, c = 2^{-3/2}/π.
pub fn hankel_integral(z: f64, order: u32) -> c64 {
    let (t, w) = laguerre();
    let c = 1.0 / (2f64.powf(1.5) * PI);
    let mut f = [c64::new(0.0, 0.0); 3];
    for (&tk, &wk) in t.iter().zip(w) {
        let base = c64::new(tk / 2.0, -z);
        let r = base.powf(-0.5);
        f[0] += wk * r;
        if order >= 1 {
            let r3 = r / base;
            f[1] += wk * 0.5 * I * r3;
            if order >= 2 {
                f[2] += wk * (-0.75) * r3 / base;
            }
        }
    }
    let (f0, f1, f2) = (c * f[0], c * f[1], c * f[2]);
    let e = c64::from_polar(1.0, z);
    match order {
        0 => e * f0,
        1 => e * (I * f0 + f1),
        _ => e * (-f0 + 2.0 * I * f1 + f2),
    }
}

const TABLE_STEP: f64 = 0.01;

/// 𝓗 and 𝓗′ on a uniform grid over [CROSSOVER, ASYMPTOTIC_FROM].
fn hankel_table() -> &'static Vec<(c64, c64)> {
    static TABLE: OnceLock<Vec<(c64, c64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let count = ((ASYMPTOTIC_FROM - CROSSOVER) / TABLE_STEP).round() as usize;
        (0..=count)
            .map(|k| {
                let z = CROSSOVER + k as f64 * TABLE_STEP;
                (hankel_integral(z, 0), hankel_integral(z, 1))
            })
            .collect()
    })
}

/// 𝓗(z) with the integral branch replaced by cubic Hermite interpolation (relative error ≲ 10⁻¹¹).
pub fn hankel_interpolated(z: f64) -> c64 {
    if z <= CROSSOVER || z >= ASYMPTOTIC_FROM {
        return hankel_unchecked(z, 0);
    }
    let table = hankel_table();
    let x = (z - CROSSOVER) / TABLE_STEP;
    let k = (x.floor() as usize).min(table.len() - 2);
    let t = x - k as f64;
    let ((f0, d0), (f1, d1)) = (table[k], table[k + 1]);
    let (t2, t3) = (t * t, t * t * t);
    f0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * (TABLE_STEP * (t3 - 2.0 * t2 + t))
        + f1 * (3.0 * t2 - 2.0 * t3)
        + d1 * (TABLE_STEP * (t3 - t2))
}

/// (𝓗(z), 𝓗′(z)); on the table range 𝓗′ is interpolated using 𝓗″ = −𝓗′/z − 𝓗.
pub fn hankel_with_derivative(z: f64) -> (c64, c64) {
    if z <= CROSSOVER || z >= ASYMPTOTIC_FROM {
        return (hankel_unchecked(z, 0), hankel_unchecked(z, 1));
    }
    let table = hankel_table();
    let x = (z - CROSSOVER) / TABLE_STEP;
    let k = (x.floor() as usize).min(table.len() - 2);
    let t = x - k as f64;
    let ((f0, d0), (f1, d1)) = (table[k], table[k + 1]);
    let (z0, z1) = (
        CROSSOVER + k as f64 * TABLE_STEP,
        CROSSOVER + (k + 1) as f64 * TABLE_STEP,
    );
    let (s0, s1) = (-d0 / z0 - f0, -d1 / z1 - f1);
    let (t2, t3) = (t * t, t * t * t);
    let (h00, h10, h01, h11) = (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        3.0 * t2 - 2.0 * t3,
        t3 - t2,
    );
    let value = f0 * h00 + d0 * (TABLE_STEP * h10) + f1 * h01 + d1 * (TABLE_STEP * h11);
    let deriv = d0 * h00 + s0 * (TABLE_STEP * h10) + d1 * h01 + s1 * (TABLE_STEP * h11);
    (value, deriv)
}

/// 𝓗_m(z) = (i/4)H_m⁽¹⁾(z) for m = 0..=m_max by upward recurrence (stable: the Y part dominates).
pub fn hankel_orders(z: f64, m_max: usize) -> Vec<c64> {
    let (h0, d0) = hankel_with_derivative(z);
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(h0);
    if m_max >= 1 {
        out.push(-d0);
    }
    for m in 1..m_max {
        let next = out[m] * (2.0 * m as f64 / z) - out[m - 1];
        out.push(next);
    }
    out
}

/// J_m(z) for m = 0..=m_max by Miller's downward recurrence, normalised by J₀ + 2ΣJ_{2k} = 1.
pub fn bessel_j_orders(z: f64, m_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let base = m_max.max(z.abs().ceil() as usize);
        base + 20 + (40.0 * base as f64).sqrt() as usize
    } & !1;
    let (mut above, mut current) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k <= m_max {
            out[k] = current;
        }
        if k % 2 == 0 {
            norm += if k == 0 { current } else { 2.0 * current };
        }
        if k == 0 {
            break;
        }
        let below = 2.0 * k as f64 / z * current - above;
        above = current;
        current = below;
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// J₀(z) = 4 Im 𝓗(z) for real z ≥ 0.
pub fn bessel_j0(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    4.0 * hankel_interpolated(z.abs()).im
}

/// 𝒢_λ(r) = 𝓗(λr) on the outgoing branch, its conjugate on the incoming one.
pub fn resolvent_kernel(lambda: f64, r: f64, branch: Branch) -> Result<c64> {
    resolvent_kernel_deriv(lambda, r, 0, branch)
}

/// ∂_λ^j 𝒢_λ(r) = r^j 𝓗^{(j)}(λr).
pub fn resolvent_kernel_deriv(lambda: f64, r: f64, order: u32, branch: Branch) -> Result<c64> {
    check_positive(lambda)?;
    check_order(order)?;
    if r <= 0.0 {
        return Err(Error::Singular);
    }
    let z = lambda * r;
    let value = if order == 0 {
        hankel_interpolated(z)
    } else {
        r.powi(order as i32) * hankel_unchecked(z, order)
    };
    Ok(branch.apply(value))
}

pub fn static_kernel(kind: StaticKind, r: f64) -> Result<f64> {
    match kind {
        StaticKind::N0 if r <= 0.0 => Err(Error::Singular),
        StaticKind::N0 => Ok(-r.ln() / (2.0 * PI)),
        StaticKind::G1 => Ok(r * r / 4.0),
        StaticKind::G2 if r < 0.0 => Err(Error::Singular),
        StaticKind::G2 if r == 0.0 => Ok(0.0),
        StaticKind::G2 => Ok(r * r * (1.0 - r.ln()) / (8.0 * PI)),
    }
}

const MOMENT_TERMS: usize = 40;

/// (avg r^{2k}, avg r^{2k} log r) over the unit square centred at the origin.
pub fn unit_cell_moments(k: usize) -> (f64, f64) {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let (phi, w) = gauss_legendre(96, 0.0, PI / 4.0);
        (0..MOMENT_TERMS)
            .map(|k| {
                let p = 2.0 * k as f64 + 2.0;
                let (mut m, mut l) = (0.0, 0.0);
                for (&ph, &wt) in phi.iter().zip(&w) {
                    let r = 0.5 / ph.cos();
                    let base = r.powf(p) / p;
                    m += 8.0 * wt * base;
                    l += 8.0 * wt * base * (r.ln() - 1.0 / p);
                }
                (m, l)
            })
            .collect()
    });
    table[k.min(MOMENT_TERMS - 1)]
}

/// Average of r^{2k} log r over a square cell of side h centred on r = 0.
fn cell_log_moment(k: usize, h: f64) -> f64 {
    let (m, l) = unit_cell_moments(k);
    h.powi(2 * k as i32) * (l + m * h.ln())
}

/// Self-cell value of a static kernel: point value of the smooth part plus the
/// cell average of the logarithmic part.
pub fn static_self_cell(kind: StaticKind, h: f64) -> f64 {
    match kind {
        StaticKind::N0 => -cell_log_moment(0, h) / (2.0 * PI),
        StaticKind::G1 => 0.0,
        StaticKind::G2 => -cell_log_moment(1, h) / (8.0 * PI),
    }
}

/// Self-cell value of ∂_λ^j 𝒢_λ for a cell of side h, same rule as
/// [`static_self_cell`]; for λh large the whole kernel is averaged instead.
pub fn resolvent_self_cell(lambda: f64, h: f64, order: u32, branch: Branch) -> Result<c64> {
    check_positive(lambda)?;
    check_order(order)?;
    if lambda * h > CELL_SERIES_LIMIT {
        return Ok(branch.apply(polar_cell_average(lambda, h, order)));
    }
    Ok(branch.apply(g_deriv(lambda, order) + self_cell_series(lambda, h, order, 0)))
}

/// −(1/2π) Σ_{k≥k0} (−1)^k (λ/2)^{2k}/(k!)² avg(r^{2k} log r), differentiated `order` times in λ.
fn self_cell_series(lambda: f64, h: f64, order: u32, k0: usize) -> c64 {
    let x = lambda * lambda / 4.0;
    let mut sum = 0.0;
    let mut t = 1.0; // (λ/2)^{2k}/(k!)²
    for k in 0..MOMENT_TERMS {
        let kf = k as f64;
        if k > 0 {
            t *= x / (kf * kf);
        }
        if k < k0 {
            continue;
        }
        let w = match order {
            0 => 1.0,
            1 => 2.0 * kf / lambda,
            _ => 2.0 * kf * (2.0 * kf - 1.0) / (lambda * lambda),
        };
        let term = if k % 2 == 0 { 1.0 } else { -1.0 } * t * w * cell_log_moment(k, h);
        sum += term;
        if k > k0 + 2 && term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    c64::new(-sum / (2.0 * PI), 0.0)
}

/// 𝒢_λ(r) with its Taylor terms of order λ^{2k}, k < k0, removed.
///
/// k0 = 1 gives 𝒢_λ − g(λ) − N₀ and k0 = 2 additionally removes
/// −g(λ)λ²G₁ − λ²G₂; the series is summed without cancellation.
pub fn resolvent_tail(lambda: f64, r: f64, k0: usize) -> Result<c64> {
    check_positive(lambda)?;
    if r <= 0.0 {
        return Err(Error::Singular);
    }
    let z = lambda * r;
    let x = z * z / 4.0;
    let gz = g_unchecked(z);
    if z > CROSSOVER {
        let mut head = c64::new(0.0, 0.0);
        let (mut t, mut harmonic) = (1.0, 0.0);
        for k in 0..k0 {
            let kf = k as f64;
            if k > 0 {
                t *= x / (kf * kf);
                harmonic += 1.0 / kf;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            head += gz * sign * t + sign * harmonic * t / (2.0 * PI);
        }
        return Ok(hankel_unchecked(z, 0) - head);
    }
    let (mut jt, mut st) = (0.0, 0.0);
    let (mut t, mut harmonic) = (1.0, 0.0);
    for k in 0..400 {
        let kf = k as f64;
        if k > 0 {
            t *= x / (kf * kf);
            harmonic += 1.0 / kf;
        }
        if k < k0 {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        jt += sign * t;
        st -= sign * harmonic * t;
        if t * harmonic.max(1.0) < 1e-17 * jt.abs().max(st.abs()) {
            break;
        }
    }
    Ok(gz * jt - st / (2.0 * PI))
}

/// Self-cell value matching [`resolvent_tail`].
pub fn resolvent_tail_self_cell(lambda: f64, h: f64, k0: usize) -> Result<c64> {
    check_positive(lambda)?;
    if lambda * h > CELL_SERIES_LIMIT {
        return Err(Error::Domain(format!(
            "λh = {} too large for the threshold expansion",
            lambda * h
        )));
    }
    Ok(self_cell_series(lambda, h, 0, k0.max(1)))
}

fn polar_cell_average(lambda: f64, h: f64, order: u32) -> c64 {
    let nphi = 24 + (lambda * h) as usize;
    let (phi, wphi) = gauss_legendre(nphi, 0.0, PI / 4.0);
    let mut acc = c64::new(0.0, 0.0);
    for (&ph, &wp) in phi.iter().zip(&wphi) {
        let rmax = 0.5 * h / ph.cos();
        let ns = 24 + (2.0 * lambda * rmax) as usize;
        let (s, ws) = gauss_legendre(ns, 0.0, 1.0);
        let mut inner = c64::new(0.0, 0.0);
        for (&sk, &wk) in s.iter().zip(&ws) {
            let rho = rmax * sk * sk;
            let f = rho.powi(order as i32) * hankel_unchecked(lambda * rho, order);
            inner += wk * f * rho * 2.0 * rmax * sk;
        }
        acc += wp * inner;
    }
    acc * 8.0 / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: c64, b: c64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm()
    }

    // 0.25i·H₀⁽¹⁾ and derivatives, mpmath at 30 digits
    #[allow(clippy::excessive_precision)]
    const ORACLE: [(f64, [(f64, f64); 3]); 6] = [
        (
            0.1,
            [
                (0.383_559_662_837_591_71, 0.249_375_390_516_510_01),
                (-1.614_737_773_675_506_7, -0.012_484_381_509_060_499),
                (15.763_818_073_917_476, -0.124_531_575_425_905_01),
            ],
        ),
        (
            0.5,
            [
                (0.111_129_683_376_676_64, 0.234_617_451_810_203_23),
                (-0.367_868_098_167_560_77, -0.060_567_114_418_718_472),
                (0.624_606_512_958_444_9, -0.113_483_222_972_766_28),
            ],
        ),
        (
            1.0,
            [
                (-0.022_064_241_053_919_239, 0.191_299_421_639_491_64),
                (-0.195_303_205_325_072_18, -0.110_012_646_436_233_38),
                (0.217_367_446_378_991_42, -0.081_286_775_203_258_259),
            ],
        ),
        (
            2.0,
            [
                (-0.127_593_918_162_436_28, 0.055_972_694_785_308_917),
                (-0.026_758_107_885_234_387, -0.144_181_201_939_218_35),
                (0.140_972_972_105_053_47, 0.016_117_906_184_300_256),
            ],
        ),
        (
            5.0,
            [
                (0.077_129_406_312_258_445, -0.044_399_192_828_584_576),
                (0.036_965_785_847_806_711, 0.081_894_784_397_866_306),
                (-0.084_522_563_481_819_787, 0.028_020_235_949_011_315),
            ],
        ),
        (
            20.0,
            [
                (-0.015_660_149_202_345_958, 0.041_756_166_085_145_789),
                (-0.041_377_903_590_630_324, -0.016_708_281_043_962_511),
                (0.017_729_044_381_877_474, -0.040_920_752_032_947_663),
            ],
        ),
    ];

    #[test]
    fn hankel_matches_oracle() {
        for (lam, vals) in ORACLE {
            for (j, (re, im)) in vals.iter().enumerate() {
                let got = hankel_h0(lam, j as u32).unwrap();
                assert!(close(got, c64::new(*re, *im), 1e-11), "λ={lam} j={j}: {got}");
            }
        }
    }

    #[test]
    fn branches_agree() {
        for k in 0..=45 {
            let z = 0.5 + 0.1 * k as f64;
            let a = hankel_series(z, 0);
            let b = hankel_integral(z, 0);
            assert!(close(a, b, 1e-8), "z={z}");
        }
        for k in 0..40 {
            let z = 20.0 + 2.0 * k as f64;
            for j in 0..3 {
                assert!(
                    close(hankel_asymptotic(z, j), hankel_integral(z, j), 1e-12),
                    "z={z} j={j}"
                );
            }
        }
    }

    #[test]
    fn interpolated_matches_integral() {
        for k in 0..=2300 {
            let z = 2.0 + 0.01 * k as f64 + 0.0037;
            assert!(close(hankel_interpolated(z), hankel_integral(z, 0), 1e-10), "z={z}");
        }
    }

    #[test]
    fn integer_orders_match_reference() {
        // scipy.special.jv / yv
        let j = bessel_j_orders(1.0, 10);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((j[10] - 2.630_615_123_687_453e-10).abs() < 1e-22);
        assert!((bessel_j_orders(3.0, 2)[2] - 0.486_091_260_585_891_1).abs() < 1e-14);
        assert!((bessel_j_orders(10.0, 5)[5] + 0.234_061_528_186_793_6).abs() < 1e-14);
        let quarter_i = c64::new(0.0, 0.25);
        let h = hankel_orders(3.0, 2)[2];
        assert!(close(
            h,
            quarter_i * c64::new(0.486_091_260_585_891_1, -0.160_400_393_484_923_7),
            1e-10
        ));
        let h = hankel_orders(10.0, 5)[5];
        assert!(close(
            h,
            quarter_i * c64::new(-0.234_061_528_186_793_6, 0.135_403_047_689_362_4),
            1e-10
        ));
        for z in [0.3, 2.5, 7.77, 24.9, 40.0] {
            let (v, d) = hankel_with_derivative(z);
            assert!(
                close(v, hankel_unchecked(z, 0), 1e-10) && close(d, hankel_unchecked(z, 1), 1e-9),
                "z={z}"
            );
        }
    }

    #[test]
    fn g_at_two() {
        // −γ/(2π) + i/4, mpmath
        let g = g_threshold(2.0).unwrap();
        assert!((g.re + 0.091_866_726_299_153_99).abs() < 1e-15);
        assert_eq!(g.im, 0.25);
        let g = g_threshold(2.0 * std::f64::consts::E).unwrap();
        assert!((g.re + (1.0 + EULER_GAMMA) / (2.0 * PI)).abs() < 1e-15);
        assert!(g_threshold(0.0).is_err());
        assert!(g_threshold(-1.0).is_err());
    }

    #[test]
    fn small_lambda_leading_term() {
        let l = 1e-3;
        assert!((hankel_h0(l, 0).unwrap() - g_threshold(l).unwrap()).norm() < 1e-5);
    }

    #[test]
    fn order_and_radius_errors() {
        assert!(matches!(hankel_h0(1.0, 3), Err(Error::Argument(_))));
        assert!(matches!(
            resolvent_kernel(1.0, 0.0, Branch::Outgoing),
            Err(Error::Singular)
        ));
        assert!(matches!(static_kernel(StaticKind::N0, 0.0), Err(Error::Singular)));
    }

    #[test]
    fn static_kernel_values() {
        assert_eq!(static_kernel(StaticKind::N0, 1.0).unwrap(), 0.0);
        assert_eq!(static_kernel(StaticKind::G1, 2.0).unwrap(), 1.0);
        assert!(static_kernel(StaticKind::G2, std::f64::consts::E).unwrap().abs() < 1e-16);
    }

    #[test]
    fn unit_cell_moments_frozen() {
        // mpmath polar quadrature; avg log r = (ln(1/2) − 3 + π/2)/2
        let (m0, l0) = unit_cell_moments(0);
        assert!((m0 - 1.0).abs() < 1e-14);
        assert!((l0 + 1.061_175_426_882_524_3).abs() < 1e-13);
        let (m1, l1) = unit_cell_moments(1);
        assert!((m1 - 1.0 / 6.0).abs() < 1e-14);
        assert!((l1 + 0.131_201_306_985_763_64).abs() < 1e-13);
        let (m2, l2) = unit_cell_moments(2);
        assert!((m2 - 0.038_888_888_888_888_89).abs() < 1e-14);
        assert!((l2 + 0.026_417_882_250_916_18).abs() < 1e-13);
    }

    #[test]
    fn direct_cell_average_differs_by_smooth_part() {
        // full average − series rule ≈ avg of the smooth part minus its centre value
        let (lam, h) = (1.0, 0.25);
        let a = resolvent_self_cell(lam, h, 0, Branch::Outgoing).unwrap();
        let b = polar_cell_average(lam, h, 0);
        let expect = -(lam * h).powi(2) / 24.0 * (g_unchecked(lam) + 1.0 / (2.0 * PI));
        assert!(
            ((b - a) - expect).norm() < 0.05 * expect.norm(),
            "{} vs {expect}",
            b - a
        );
    }

    #[test]
    fn tail_matches_direct_subtraction() {
        for (lam, r) in [(0.3, 1.7), (0.05, 3.0), (1.0, 3.5)] {
            let direct = hankel_h0(lam * r, 0).unwrap() - g_unchecked(lam) - static_kernel(StaticKind::N0, r).unwrap();
            let t1 = resolvent_tail(lam, r, 1).unwrap();
            assert!((direct - t1).norm() < 1e-13, "{direct} {t1}");
            let d2 = direct
                + g_unchecked(lam) * lam * lam * static_kernel(StaticKind::G1, r).unwrap()
                + lam * lam * static_kernel(StaticKind::G2, r).unwrap();
            let t2 = resolvent_tail(lam, r, 2).unwrap();
            assert!((d2 - t2).norm() < 1e-13, "{d2} {t2}");
        }
    }

    #[test]
    fn self_cell_static_limit() {
        // M diagonal − g − N0 diagonal → λ²·avg(r² log r)/(8π)
        let h = 0.3;
        let lam = 1e-3;
        let d = resolvent_self_cell(lam, h, 0, Branch::Outgoing).unwrap()
            - g_unchecked(lam)
            - static_self_cell(StaticKind::N0, h);
        let expect = -lam * lam * static_self_cell(StaticKind::G2, h);
        assert!((d.re - expect).abs() < 1e-6 * expect.abs() + 1e-18, "{d} {expect}");
    }
}
