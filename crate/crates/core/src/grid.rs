//! Cell-centred grids on [−L, L]², grid functions, the unitary Fourier transform,
//! circle traces and the spectral-density operator Π(λ).

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft2;

const ZERO: c64 = c64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub n: usize,
    pub half_width: f64,
}

impl Grid2D {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Argument(format!("grid size {n} must be a power of two ≥ 16")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Argument(format!("half width {half_width} must be positive")));
        }
        Ok(Self { n, half_width })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Node coordinate along one axis; nodes are symmetric about 0.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n as f64 - 1.0) / 2.0) * self.h()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.coord(idx / self.n), self.coord(idx % self.n))
    }

    /// Dual grid spacing π/L.
    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.h()
    }

    /// Signed frequency of FFT index k (the Nyquist index maps to −π/h).
    pub fn freq(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let s = if k < n / 2 { k } else { k - n };
        s as f64 * self.dxi()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.freq(k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Physical,
    Frequency,
}

/// Samples on a grid; in `Frequency` space the values sit in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid2D,
    pub space: Space,
    pub values: Vec<c64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            space: Space::Physical,
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<c64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "{} values for a {}² grid",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite grid values".into()));
        }
        Ok(Self {
            grid,
            space: Space::Physical,
            values,
        })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> c64) -> Self {
        let x = grid.coords();
        let mut values = Vec::with_capacity(grid.len());
        for &xi in &x {
            for &yj in &x {
                values.push(f(xi, yj));
            }
        }
        Self {
            grid,
            space: Space::Physical,
            values,
        }
    }

    pub fn from_real_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |x, y| c64::new(f(x, y), 0.0))
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn at(&self, i: usize, j: usize) -> c64 {
        self.values[i * self.grid.n + j]
    }

    pub fn map(&self, f: impl Fn(c64) -> c64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(c64, c64) -> c64) -> Self {
        assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { values, ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: c64) -> Self {
        self.map(|v| v * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Cell weight h² in physical space, (π/L)² in frequency space.
    pub fn cell_area(&self) -> f64 {
        match self.space {
            Space::Physical => self.grid.h().powi(2),
            Space::Frequency => self.grid.dxi().powi(2),
        }
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ∫ f ḡ
    pub fn inner(&self, other: &Self) -> c64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<c64>()
            * self.cell_area()
    }

    /// Rotation by π/2: (Ru)(x, y) = u(y, −x).
    pub fn rotate90(&self) -> Self {
        let n = self.grid.n;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.values[j * n + (n - 1 - i)];
            }
        }
        Self {
            values: out,
            ..self.clone()
        }
    }

    /// u(−x)
    pub fn reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..self.clone() }
    }

    /// Shift by whole cells: out(x) = u(x − (di, dj)h), zero fill.
    pub fn translate_cells(&self, di: i64, dj: i64) -> Self {
        let n = self.grid.n as i64;
        let mut out = vec![ZERO; self.values.len()];
        for i in 0..n {
            for j in 0..n {
                let (si, sj) = (i - di, j - dj);
                if (0..n).contains(&si) && (0..n).contains(&sj) {
                    out[(i * n + j) as usize] = self.values[(si * n + sj) as usize];
                }
            }
        }
        Self {
            values: out,
            ..self.clone()
        }
    }

    /// u(s·x) through the band-limited interpolant; points leaving the box are set to zero.
    pub fn dilate(&self, s: f64) -> Self {
        let u_hat = fourier_forward(self);
        let g = self.grid;
        let n = g.n;
        let x = g.coords();
        let xi = g.freqs();
        // A[i][k] = e^{iξ_k s x_i}, skipping the Nyquist index to keep the interpolant real-symmetric
        let a: Vec<c64> = x
            .iter()
            .flat_map(|&xv| {
                xi.iter().enumerate().map(move |(k, &f)| {
                    if k == n / 2 {
                        ZERO
                    } else {
                        c64::from_polar(1.0, f * s * xv)
                    }
                })
            })
            .collect();
        // tmp = A û, out = tmp Aᵀ
        let mut tmp = vec![ZERO; n * n];
        for i in 0..n {
            for k1 in 0..n {
                let c = a[i * n + k1];
                if c == ZERO {
                    continue;
                }
                let row = &u_hat.values[k1 * n..(k1 + 1) * n];
                let t = &mut tmp[i * n..(i + 1) * n];
                for (tv, &r) in t.iter_mut().zip(row) {
                    *tv += c * r;
                }
            }
        }
        let scale = g.dxi().powi(2) / (2.0 * PI);
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let (xi_, yj) = (s * x[i], s * x[j]);
                if xi_.abs() > g.half_width || yj.abs() > g.half_width {
                    continue;
                }
                let t = &tmp[i * n..(i + 1) * n];
                let arow = &a[j * n..(j + 1) * n];
                out[i * n + j] = t.iter().zip(arow).map(|(p, q)| p * q).sum::<c64>() * scale;
            }
        }
        Self {
            grid: g,
            space: Space::Physical,
            values: out,
        }
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(std::fs::File::create(path)?);
        f.write_all(BINARY_MAGIC)?;
        f.write_all(&1u32.to_le_bytes())?;
        let space = match self.space {
            Space::Physical => 0u32,
            Space::Frequency => 1u32,
        };
        f.write_all(&space.to_le_bytes())?;
        f.write_all(&(self.grid.n as u64).to_le_bytes())?;
        f.write_all(&self.grid.half_width.to_le_bytes())?;
        for v in &self.values {
            f.write_all(&v.re.to_le_bytes())?;
            f.write_all(&v.im.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut f = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("not a grid-function file".into()));
        }
        let version = read_u32(&mut f)?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let space = match read_u32(&mut f)? {
            0 => Space::Physical,
            1 => Space::Frequency,
            s => return Err(Error::Format(format!("bad space tag {s}"))),
        };
        let n = read_u64(&mut f)? as usize;
        let l = read_f64(&mut f)?;
        let grid = Grid2D::new(n, l)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut f)?;
            let im = read_f64(&mut f)?;
            values.push(c64::new(re, im));
        }
        let mut out = Self::from_values(grid, values)?;
        out.space = space;
        Ok(out)
    }

    /// CSV rows `x,y,re,im` in row-major order after a `# n=.. L=.. space=..` line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(std::fs::File::create(path)?);
        let (label, axis): (&str, Vec<f64>) = match self.space {
            Space::Physical => ("physical", self.grid.coords()),
            Space::Frequency => ("frequency", self.grid.freqs()),
        };
        writeln!(f, "# n={} L={} space={}", self.grid.n, self.grid.half_width, label)?;
        writeln!(f, "x,y,re,im")?;
        let n = self.grid.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.values[i * n + j];
                writeln!(f, "{:e},{:e},{:e},{:e}", axis[i], axis[j], v.re, v.im)?;
            }
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))??;
        let mut n = None;
        let mut l = None;
        let mut space = Space::Physical;
        for tok in header.trim_start_matches('#').split_whitespace() {
            match tok.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("L", v)) => l = v.parse::<f64>().ok(),
                Some(("space", "frequency")) => space = Space::Frequency,
                _ => {}
            }
        }
        let (n, l) = match (n, l) {
            (Some(n), Some(l)) => (n, l),
            _ => return Err(Error::Format(format!("bad header `{header}`"))),
        };
        let grid = Grid2D::new(n, l)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            if line.starts_with('x') || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("bad row `{line}`: {e}")))?;
            if cols.len() != 4 {
                return Err(Error::Format(format!("expected 4 columns in `{line}`")));
            }
            values.push(c64::new(cols[2], cols[3]));
        }
        let mut out = Self::from_values(grid, values)?;
        out.space = space;
        Ok(out)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"T2GF";

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Per-axis phase e^{−iξ_k x₀} that re-centres the FFT on the symmetric grid.
fn phases(grid: &Grid2D, sign: f64) -> Vec<c64> {
    let x0 = grid.coord(0);
    grid.freqs()
        .iter()
        .map(|&f| c64::from_polar(1.0, sign * f * x0))
        .collect()
}

/// û(ξ) = (1/2π)∫e^{−ixξ}u(x)dx on the dual grid (FFT order).
pub fn fourier_forward(u: &GridFunction) -> GridFunction {
    let g = u.grid;
    let n = g.n;
    let mut buf = u.values.clone();
    fft2(&mut buf, n, n, false);
    let ph = phases(&g, -1.0);
    let scale = g.h().powi(2) / (2.0 * PI);
    for k1 in 0..n {
        for k2 in 0..n {
            buf[k1 * n + k2] *= ph[k1] * ph[k2] * scale;
        }
    }
    GridFunction {
        grid: g,
        space: Space::Frequency,
        values: buf,
    }
}

pub fn fourier_inverse(u_hat: &GridFunction) -> GridFunction {
    let g = u_hat.grid;
    let n = g.n;
    let ph = phases(&g, 1.0);
    let mut buf = u_hat.values.clone();
    for k1 in 0..n {
        for k2 in 0..n {
            buf[k1 * n + k2] *= ph[k1] * ph[k2];
        }
    }
    fft2(&mut buf, n, n, true);
    let scale = g.dxi().powi(2) / (2.0 * PI);
    for v in &mut buf {
        *v *= scale;
    }
    GridFunction {
        grid: g,
        space: Space::Physical,
        values: buf,
    }
}

/// Multiply û by m(|ξ|).
pub fn fourier_multiplier(u: &GridFunction, m: impl Fn(f64) -> f64) -> GridFunction {
    let mut u_hat = fourier_forward(u);
    let xi = u.grid.freqs();
    let n = u.grid.n;
    for k1 in 0..n {
        for k2 in 0..n {
            u_hat.values[k1 * n + k2] *= m(xi[k1].hypot(xi[k2]));
        }
    }
    fourier_inverse(&u_hat)
}

pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Argument(format!("p = {p} must exceed 1")));
    }
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    let s: f64 = u.values.iter().map(|v| v.norm().powf(p)).sum();
    Ok((s * u.cell_area()).powf(1.0 / p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandWindow {
    pub alpha: f64,
    pub beta: f64,
}

impl BandWindow {
    pub fn new(alpha: f64, beta: f64, grid: &Grid2D) -> Result<Self> {
        if !(alpha > 0.0 && alpha < beta) {
            return Err(Error::Argument(format!(
                "band window needs 0 < α < β, got ({alpha}, {beta})"
            )));
        }
        if beta > grid.nyquist() {
            return Err(Error::Domain(format!("β = {beta} beyond Nyquist {}", grid.nyquist())));
        }
        Ok(Self { alpha, beta })
    }

    /// Smooth radial profile: 1 on [2α, β/2], 0 outside (α, β).
    pub fn profile(&self, r: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if r <= a || r >= b {
            return 0.0;
        }
        let rise = smooth_step((r - a) / a);
        let fall = smooth_step((b - r) / (b / 2.0));
        rise * fall
    }
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    f(t) / (f(t) + f(1.0 - t))
}

pub fn dstar_project(u: &GridFunction, window: &BandWindow) -> GridFunction {
    fourier_multiplier(u, |r| window.profile(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffSide {
    LeQ,
    Gt,
}

/// χ(λ/a) with χ = 1 on [0, 1/2], 0 on [1, ∞) and a quintic smoothstep between.
pub fn chi_cutoff(lambda: f64, a: f64, side: CutoffSide) -> f64 {
    let t = lambda.abs() / a;
    let le = if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = 2.0 * t - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    };
    match side {
        CutoffSide::LeQ => le,
        CutoffSide::Gt => 1.0 - le,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TraceMethod {
    /// Direct evaluation of the discrete Fourier sum at off-grid frequencies.
    #[default]
    Exact,
    /// Bicubic convolution interpolation on the dual grid.
    Bicubic,
}

pub const DEFAULT_ANGLES: usize = 128;

pub fn angles(n_angles: usize) -> Vec<(f64, f64)> {
    (0..n_angles)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n_angles as f64;
            (t.cos(), t.sin())
        })
        .collect()
}

/// Evaluates the discrete Fourier transform of a physical-space function at arbitrary ξ.
pub struct Spectrum<'a> {
    u: &'a GridFunction,
    x: Vec<f64>,
}

impl<'a> Spectrum<'a> {
    pub fn new(u: &'a GridFunction) -> Self {
        assert_eq!(u.space, Space::Physical);
        Self { u, x: u.grid.coords() }
    }

    pub fn eval(&self, xi1: f64, xi2: f64) -> c64 {
        let n = self.u.grid.n;
        let e1: Vec<c64> = self.x.iter().map(|&x| c64::from_polar(1.0, -xi1 * x)).collect();
        let e2: Vec<c64> = self.x.iter().map(|&x| c64::from_polar(1.0, -xi2 * x)).collect();
        let mut acc = ZERO;
        for (row, &phase) in self.u.values.chunks_exact(n).zip(&e1) {
            let s: c64 = row.iter().zip(&e2).map(|(a, b)| a * b).sum();
            acc += phase * s;
        }
        acc * self.u.grid.h().powi(2) / (2.0 * PI)
    }

    pub fn circle(&self, lambda: f64, n_angles: usize) -> Vec<c64> {
        angles(n_angles)
            .iter()
            .map(|&(c, s)| self.eval(lambda * c, lambda * s))
            .collect()
    }
}

fn check_trace_args(grid: &Grid2D, lambda: f64, n_angles: usize) -> Result<()> {
    if !(lambda > 0.0) || lambda > grid.nyquist() {
        return Err(Error::Domain(format!(
            "λ = {lambda} outside (0, Nyquist {}]",
            grid.nyquist()
        )));
    }
    if n_angles < 16 {
        return Err(Error::Argument(format!("n_angles = {n_angles} < 16")));
    }
    Ok(())
}

/// Samples û(λω_k) on n_angles equispaced directions starting at ω = (1, 0).
pub fn circle_trace(u_hat: &GridFunction, lambda: f64, n_angles: usize) -> Result<Vec<c64>> {
    circle_trace_with(u_hat, lambda, n_angles, TraceMethod::Exact)
}

pub fn circle_trace_with(u_hat: &GridFunction, lambda: f64, n_angles: usize, method: TraceMethod) -> Result<Vec<c64>> {
    check_trace_args(&u_hat.grid, lambda, n_angles)?;
    if u_hat.space != Space::Frequency {
        return Err(Error::Argument(
            "circle_trace expects a frequency-space function".into(),
        ));
    }
    Ok(match method {
        TraceMethod::Exact => {
            let u = fourier_inverse(u_hat);
            Spectrum::new(&u).circle(lambda, n_angles)
        }
        TraceMethod::Bicubic => angles(n_angles)
            .iter()
            .map(|&(c, s)| bicubic(u_hat, lambda * c, lambda * s))
            .collect(),
    })
}

fn keys_kernel(t: f64) -> f64 {
    let t = t.abs();
    if t < 1.0 {
        1.5 * t * t * t - 2.5 * t * t + 1.0
    } else if t < 2.0 {
        -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
    } else {
        0.0
    }
}

fn bicubic(u_hat: &GridFunction, xi1: f64, xi2: f64) -> c64 {
    let n = u_hat.grid.n as i64;
    let d = u_hat.grid.dxi();
    let (p1, p2) = (xi1 / d, xi2 / d);
    let (b1, b2) = (p1.floor() as i64, p2.floor() as i64);
    let wrap = |k: i64| k.rem_euclid(n) as usize;
    let mut acc = ZERO;
    for a in (b1 - 1)..=(b1 + 2) {
        let wa = keys_kernel(p1 - a as f64);
        for b in (b2 - 1)..=(b2 + 2) {
            let wb = keys_kernel(p2 - b as f64);
            acc += wa * wb * u_hat.values[wrap(a) * n as usize + wrap(b)];
        }
    }
    acc
}

/// Smallest angle count that resolves e^{iλω·x} for |x| ≤ radius, rounded to a multiple of 8.
pub fn angles_for(lambda: f64, radius: f64, n_angles: usize) -> usize {
    let need = (2.0 * lambda * radius).ceil() as usize + 48;
    n_angles.max(need).div_ceil(8) * 8
}

/// Π(λ)u on the whole grid; the angle count is raised to resolve the grid corners.
pub fn pi_lambda(u: &GridFunction, lambda: f64) -> Result<GridFunction> {
    pi_lambda_with(u, lambda, DEFAULT_ANGLES)
}

pub fn pi_lambda_with(u: &GridFunction, lambda: f64, n_angles: usize) -> Result<GridFunction> {
    check_trace_args(&u.grid, lambda, n_angles)?;
    let g = u.grid;
    let n_angles = angles_for(lambda, g.half_width * 2f64.sqrt(), n_angles);
    let trace = Spectrum::new(u).circle(lambda, n_angles);
    let x = g.coords();
    let n = g.n;
    let mut out = vec![ZERO; n * n];
    for (&(c, s), &uh) in angles(n_angles).iter().zip(&trace) {
        let w = uh / n_angles as f64;
        let e1: Vec<c64> = x.iter().map(|&xv| w * c64::from_polar(1.0, lambda * c * xv)).collect();
        let e2: Vec<c64> = x.iter().map(|&yv| c64::from_polar(1.0, lambda * s * yv)).collect();
        for i in 0..n {
            let a = e1[i];
            let row = &mut out[i * n..(i + 1) * n];
            for (o, &b) in row.iter_mut().zip(&e2) {
                *o += a * b;
            }
        }
    }
    Ok(GridFunction {
        grid: g,
        space: Space::Physical,
        values: out,
    })
}

/// Π(λ)u at given points from a precomputed circle trace.
pub fn pi_lambda_at(trace: &[c64], lambda: f64, points: &[(f64, f64)]) -> Vec<c64> {
    let dirs = angles(trace.len());
    let m = trace.len() as f64;
    points
        .iter()
        .map(|&(x, y)| {
            dirs.iter()
                .zip(trace)
                .map(|(&(c, s), &uh)| uh * c64::from_polar(1.0, lambda * (c * x + s * y)))
                .sum::<c64>()
                / m
        })
        .collect()
}

/// 5-point −Δ_h with zero values outside the grid.
pub fn neg_laplacian(u: &GridFunction) -> GridFunction {
    let n = u.grid.n;
    let h2 = u.grid.h().powi(2);
    let v = &u.values;
    let get = |i: i64, j: i64| {
        if i < 0 || j < 0 || i >= n as i64 || j >= n as i64 {
            ZERO
        } else {
            v[i as usize * n + j as usize]
        }
    };
    let mut out = vec![ZERO; n * n];
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let c = get(i, j);
            out[i as usize * n + j as usize] =
                (4.0 * c - get(i - 1, j) - get(i + 1, j) - get(i, j - 1) - get(i, j + 1)) / h2;
        }
    }
    GridFunction {
        values: out,
        ..u.clone()
    }
}

/// Mask selecting nodes at least `margin` cells from the boundary.
pub fn interior_mask(grid: &Grid2D, margin: usize) -> Vec<bool> {
    let n = grid.n;
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            i >= margin && j >= margin && i + margin < n && j + margin < n
        })
        .collect()
}

pub fn masked_norm_l2(u: &GridFunction, mask: &[bool]) -> f64 {
    (u.values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.norm_sqr())
        .sum::<f64>()
        * u.cell_area())
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid2D, cx: f64, cy: f64) -> GridFunction {
        GridFunction::from_real_fn(grid, |x, y| (-((x - cx).powi(2) + (y - cy).powi(2)) / 2.0).exp())
    }

    #[test]
    fn grid_is_symmetric() {
        let g = Grid2D::new(16, 4.0).unwrap();
        for i in 0..16 {
            assert_eq!(g.coord(i), -g.coord(15 - i));
        }
        assert!(Grid2D::new(12, 1.0).is_err());
        assert!(Grid2D::new(8, 1.0).is_err());
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = Grid2D::new(64, 12.0).unwrap();
        let u = gaussian(g, 0.0, 0.0);
        let u_hat = fourier_forward(&u);
        let xi = g.freqs();
        let err = (0..g.len())
            .map(|k| (u_hat.values[k] - (-(xi[k / 64].powi(2) + xi[k % 64].powi(2)) / 2.0).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!((u_hat.norm_l2() - u.norm_l2()).abs() < 1e-10 * u.norm_l2());
        let back = fourier_inverse(&u_hat);
        assert!(back.sub(&u).norm_l2() < 1e-12 * u.norm_l2());
    }

    #[test]
    fn translation_becomes_modulation() {
        let g = Grid2D::new(64, 12.0).unwrap();
        let (y1, y2) = (1.5, -0.75);
        let shifted = fourier_forward(&gaussian(g, y1, y2));
        let base = fourier_forward(&gaussian(g, 0.0, 0.0));
        let xi = g.freqs();
        for k in (0..g.len()).step_by(97) {
            let ph = c64::from_polar(1.0, -(y1 * xi[k / 64] + y2 * xi[k % 64]));
            assert!((shifted.values[k] - ph * base.values[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn lp_norm_scaling_and_errors() {
        let g = Grid2D::new(128, 10.0).unwrap();
        let u = gaussian(g, 0.0, 0.0);
        let us = GridFunction::from_real_fn(g, |x, y| (-(4.0 * (x * x + y * y)) / 2.0).exp());
        for p in [1.5, 2.0, 4.0] {
            let ratio = lp_norm(&us, p).unwrap() / lp_norm(&u, p).unwrap();
            assert!((ratio - 2f64.powf(-2.0 / p)).abs() < 0.01 * ratio);
        }
        assert!(lp_norm(&u, 1.0).is_err());
        assert_eq!(lp_norm(&GridFunction::zeros(g), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn chi_cutoff_plateaus() {
        assert_eq!(chi_cutoff(0.4, 1.0, CutoffSide::LeQ), 1.0);
        assert_eq!(chi_cutoff(1.5, 1.0, CutoffSide::LeQ), 0.0);
        for k in 0..100 {
            let l = k as f64 * 0.013;
            let s = chi_cutoff(l, 0.7, CutoffSide::LeQ) + chi_cutoff(l, 0.7, CutoffSide::Gt);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn trace_of_radial_function_is_flat() {
        let g = Grid2D::new(64, 12.0).unwrap();
        let u_hat = fourier_forward(&gaussian(g, 0.0, 0.0));
        let t = circle_trace(&u_hat, 1.3, 64).unwrap();
        let expect = (-1.3f64 * 1.3 / 2.0).exp();
        for v in &t {
            assert!((v - expect).norm() < 1e-10);
        }
        assert!(circle_trace(&u_hat, 100.0, 64).is_err());
        assert!(circle_trace(&u_hat, 1.0, 8).is_err());
    }
}
