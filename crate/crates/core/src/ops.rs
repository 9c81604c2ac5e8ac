//! Nyström discretizations of the operators sandwiched by the potential factors,
//! and free-resolvent convolution on the whole grid.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::dense::DenseOperator;
use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::grid::{Grid2D, GridFunction, Space};
use crate::potential::{ActiveSet, FactoredPotential};
use crate::specfun::{
    g_threshold, resolvent_kernel_deriv, resolvent_self_cell, resolvent_tail, resolvent_tail_self_cell, static_kernel,
    static_self_cell, Branch, StaticKind,
};

const ZERO: c64 = c64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StaticOp {
    T0,
    P,
    Q,
    VN0V,
    VG1V,
    VG2V,
}

/// Kernel values on the displacement lattice |di|, |dj| ≤ span.
#[derive(Clone, Debug)]
pub struct KernelTable {
    span: usize,
    data: Vec<c64>,
}

impl KernelTable {
    /// `f` receives the distance; `diag` is the self-cell value.
    pub fn build(span: usize, h: f64, diag: c64, f: impl Fn(f64) -> c64) -> Self {
        let m = span + 1;
        let mut data = vec![ZERO; m * m];
        for i in 0..m {
            for j in 0..=i {
                let v = if i == 0 && j == 0 {
                    diag
                } else {
                    f(h * ((i * i + j * j) as f64).sqrt())
                };
                data[i * m + j] = v;
                data[j * m + i] = v;
            }
        }
        Self { span, data }
    }

    pub fn get(&self, di: i64, dj: i64) -> c64 {
        self.data[di.unsigned_abs() as usize * (self.span + 1) + dj.unsigned_abs() as usize]
    }
}

/// left(x_a)·K(x_a − x_b)·right(x_b)·h² on the active set.
pub fn sandwich(active: &ActiveSet, table: &KernelTable, left: &[f64], right: &[f64]) -> DenseOperator {
    let h2 = active.grid.h().powi(2);
    let ij = &active.ij;
    DenseOperator::from_fn(active.len(), active.len(), h2, |a, b| {
        let (ia, ja) = ij[a];
        let (ib, jb) = ij[b];
        table.get(ia - ib, ja - jb) * (left[a] * right[b] * h2)
    })
}

fn static_table(kind: StaticKind, active: &ActiveSet) -> KernelTable {
    let h = active.grid.h();
    KernelTable::build(active.span(), h, c64::new(static_self_cell(kind, h), 0.0), |r| {
        c64::new(static_kernel(kind, r).expect("r > 0 off the diagonal"), 0.0)
    })
}

fn sign_diag(active: &ActiveSet) -> DenseOperator {
    let d: Vec<c64> = active.sign.iter().map(|&s| c64::new(s, 0.0)).collect();
    DenseOperator::diagonal(&d, active.grid.h().powi(2))
}

/// v/‖v‖ in weighted coordinates.
pub fn v_hat(active: &ActiveSet) -> Vec<c64> {
    let nv = active.v_norm();
    active.v_coords().iter().map(|x| x / nv).collect()
}

pub fn build_static(kind: StaticOp, fp: &FactoredPotential) -> Result<DenseOperator> {
    let active = fp.active()?;
    Ok(build_static_on(kind, &active))
}

pub fn build_static_on(kind: StaticOp, active: &ActiveSet) -> DenseOperator {
    let h2 = active.grid.h().powi(2);
    let v = &active.v;
    match kind {
        StaticOp::P => {
            let e = v_hat(active);
            DenseOperator::outer(&e, &e, h2)
        }
        StaticOp::Q => {
            let e = v_hat(active);
            DenseOperator::identity(active.len(), h2).sub(&DenseOperator::outer(&e, &e, h2))
        }
        StaticOp::VN0V => sandwich(active, &static_table(StaticKind::N0, active), v, v),
        StaticOp::VG1V => sandwich(active, &static_table(StaticKind::G1, active), v, v),
        StaticOp::VG2V => sandwich(active, &static_table(StaticKind::G2, active), v, v),
        StaticOp::T0 => sign_diag(active).add(&build_static_on(StaticOp::VN0V, active)),
    }
}

fn resolvent_table(lambda: f64, order: u32, branch: Branch, active: &ActiveSet) -> Result<KernelTable> {
    let h = active.grid.h();
    let diag = resolvent_self_cell(lambda, h, order, branch)?;
    Ok(KernelTable::build(active.span(), h, diag, |r| {
        resolvent_kernel_deriv(lambda, r, order, branch).expect("validated λ")
    }))
}

/// M(λ) = U + vG₀(λ)v on the outgoing branch.
pub fn build_m(lambda: f64, fp: &FactoredPotential) -> Result<DenseOperator> {
    let active = fp.active()?;
    build_m_on(lambda, &active)
}

pub fn build_m_on(lambda: f64, active: &ActiveSet) -> Result<DenseOperator> {
    let table = resolvent_table(lambda, 0, Branch::Outgoing, active)?;
    Ok(sign_diag(active).add(&sandwich(active, &table, &active.v, &active.v)))
}

/// v ∂_λ^j G₀(λ) w.
pub fn build_vg0w_deriv(lambda: f64, order: u32, fp: &FactoredPotential) -> Result<DenseOperator> {
    let active = fp.active()?;
    build_vg0w_deriv_on(lambda, order, Branch::Outgoing, &active)
}

pub fn build_vg0w_deriv_on(lambda: f64, order: u32, branch: Branch, active: &ActiveSet) -> Result<DenseOperator> {
    if order > 2 {
        return Err(Error::Argument(format!("derivative order {order} not in {{0, 1, 2}}")));
    }
    let table = resolvent_table(lambda, order, branch, active)?;
    Ok(sandwich(active, &table, &active.v, &active.w))
}

/// M₀(λ) = M(λ) − g₁(λ)P − T₀ (k0 = 1) or M₁(λ) = M₀ + gλ²vG₁v + λ²vG₂v (k0 = 2),
/// assembled from the series tail so no cancellation occurs.
pub fn build_m_remainder(lambda: f64, k0: usize, active: &ActiveSet) -> Result<DenseOperator> {
    g_threshold(lambda)?;
    let h = active.grid.h();
    let diag = resolvent_tail_self_cell(lambda, h, k0)?;
    let table = KernelTable::build(active.span(), h, diag, |r| {
        resolvent_tail(lambda, r, k0).expect("r > 0")
    });
    Ok(sandwich(active, &table, &active.v, &active.v))
}

/// Convolution with ∂_λ^j 𝒢_{±λ} on the full grid through a zero-padded FFT.
///
/// Sources are read from the index box `origin + [0, span)²`; the torus has side ≥ n + span − 1.
pub struct G0Convolver {
    grid: Grid2D,
    origin: (usize, usize),
    span: usize,
    m: usize,
    kernel_hat: Vec<c64>,
}

/// Smallest 2ᵃ3ᵇ5ᶜ ≥ n.
fn fast_len(n: usize) -> usize {
    (n..)
        .find(|&k| {
            let mut k = k;
            for p in [2, 3, 5] {
                while k % p == 0 {
                    k /= p;
                }
            }
            k == 1
        })
        .expect("unbounded search")
}

impl G0Convolver {
    pub fn new(lambda: f64, branch: Branch, grid: Grid2D) -> Result<Self> {
        Self::with_order(lambda, 0, branch, grid)
    }

    pub fn with_order(lambda: f64, order: u32, branch: Branch, grid: Grid2D) -> Result<Self> {
        Self::for_sources(lambda, order, branch, grid, (0, 0), grid.n)
    }

    /// Convolver for sources supported in the index box `origin + [0, span)²`.
    pub fn for_sources(
        lambda: f64,
        order: u32,
        branch: Branch,
        grid: Grid2D,
        origin: (usize, usize),
        span: usize,
    ) -> Result<Self> {
        let n = grid.n;
        if span == 0 || origin.0 + span > n || origin.1 + span > n {
            return Err(Error::Argument("source box leaves the grid".into()));
        }
        let h = grid.h();
        let diag = resolvent_self_cell(lambda, h, order, branch)?;
        let table = KernelTable::build(n - 1, h, diag, |r| {
            resolvent_kernel_deriv(lambda, r, order, branch).expect("validated λ")
        });
        let m = fast_len(n + span - 1);
        Ok(Self {
            grid,
            origin,
            span,
            m,
            kernel_hat: padded_kernel_hat(&grid, &table, m, origin, span),
        })
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        assert_eq!(f.grid, self.grid);
        let (n, m, s) = (self.grid.n, self.m, self.span);
        let (i0, j0) = self.origin;
        let mut buf = vec![ZERO; m * m];
        for a in 0..s {
            let row = (i0 + a) * n + j0;
            buf[a * m..a * m + s].copy_from_slice(&f.values[row..row + s]);
        }
        fft2(&mut buf, m, m, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        fft2(&mut buf, m, m, true);
        let scale = 1.0 / (m * m) as f64;
        let wrap = |p: i64| p.rem_euclid(m as i64) as usize;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let bi = wrap(i as i64 - i0 as i64);
            for j in 0..n {
                out[i * n + j] = buf[bi * m + wrap(j as i64 - j0 as i64)] * scale;
            }
        }
        GridFunction {
            grid: self.grid,
            space: Space::Physical,
            values: out,
        }
    }
}

/// FFT of the kernel (times h²) on an m × m torus, covering displacements from the source box to the grid.
fn padded_kernel_hat(grid: &Grid2D, table: &KernelTable, m: usize, origin: (usize, usize), span: usize) -> Vec<c64> {
    let n = grid.n as i64;
    let h2 = grid.h().powi(2);
    let (i0, j0) = (origin.0 as i64, origin.1 as i64);
    let s = span as i64;
    let mut k = vec![ZERO; m * m];
    for di in (-i0 - s + 1)..=(n - 1 - i0) {
        let p = di.rem_euclid(m as i64) as usize;
        for dj in (-j0 - s + 1)..=(n - 1 - j0) {
            let q = dj.rem_euclid(m as i64) as usize;
            k[p * m + q] = table.get(di, dj) * h2;
        }
    }
    fft2(&mut k, m, m, false);
    k
}

pub fn apply_g0(lambda: f64, branch: Branch, f: &GridFunction) -> Result<GridFunction> {
    Ok(G0Convolver::new(lambda, branch, f.grid)?.apply(f))
}

/// N₀ applied to a grid function (−(1/2π) log convolution), used for resonance reconstruction.
pub fn apply_n0(f: &GridFunction) -> GridFunction {
    let g = f.grid;
    let n = g.n;
    let h = g.h();
    let table = KernelTable::build(n - 1, h, c64::new(static_self_cell(StaticKind::N0, h), 0.0), |r| {
        c64::new(static_kernel(StaticKind::N0, r).expect("r > 0"), 0.0)
    });
    let m = fast_len(2 * n - 1);
    G0Convolver {
        grid: g,
        origin: (0, 0),
        span: n,
        m,
        kernel_hat: padded_kernel_hat(&g, &table, m, (0, 0), n),
    }
    .apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{factor_potential, Potential, Profile};

    fn gaussian_fp(n: usize, l: f64, coupling: f64) -> FactoredPotential {
        let g = Grid2D::new(n, l).unwrap();
        factor_potential(&Potential::from_profile(g, &Profile::gaussian(1.0), coupling).unwrap())
    }

    #[test]
    fn projections() {
        let fp = gaussian_fp(32, 8.0, 1.0);
        let p = build_static(StaticOp::P, &fp).unwrap();
        let q = build_static(StaticOp::Q, &fp).unwrap();
        assert!(p.mul(&p).sub(&p).hs_norm() < 1e-12);
        assert!((p.hs_norm() - 1.0).abs() < 1e-12);
        assert!((p.trace().re - 1.0).abs() < 1e-12);
        assert!(q.mul(&q).sub(&q).hs_norm() < 1e-12);
        assert!(p.mul(&q).hs_norm() < 1e-12);
    }

    #[test]
    fn static_operators_symmetric() {
        let fp = gaussian_fp(32, 8.0, 1.0);
        for k in [StaticOp::T0, StaticOp::VN0V, StaticOp::VG1V, StaticOp::VG2V] {
            assert!(build_static(k, &fp).unwrap().asymmetry() < 1e-12);
        }
        assert!(build_m(0.3, &fp).unwrap().asymmetry() < 1e-12);
    }

    #[test]
    fn empty_potential_is_an_error() {
        let g = Grid2D::new(16, 4.0).unwrap();
        let fp = factor_potential(&Potential::zero(g));
        assert!(matches!(build_m(1.0, &fp), Err(Error::EmptyOperator)));
    }

    #[test]
    fn m_decomposes_into_threshold_pieces() {
        let fp = gaussian_fp(32, 8.0, 1.0);
        let active = fp.active().unwrap();
        let lam = 0.05;
        let m = build_m_on(lam, &active).unwrap();
        let g1 = g_threshold(lam).unwrap() * active.v_norm().powi(2);
        let t0 = build_static_on(StaticOp::T0, &active);
        let p = build_static_on(StaticOp::P, &active);
        let m0 = build_m_remainder(lam, 1, &active).unwrap();
        let recon = t0.add(&p.scale(g1)).add(&m0);
        assert!(
            m.sub(&recon).hs_norm() < 1e-12 * m.hs_norm(),
            "{}",
            m.sub(&recon).hs_norm()
        );
    }

    #[test]
    fn source_box_matches_full_padding() {
        let g = Grid2D::new(32, 8.0).unwrap();
        let f = GridFunction::from_fn(g, |x, y| {
            if (x - 0.5).abs() < 1.0 && y.abs() < 1.0 {
                c64::new(1.0 + x, y)
            } else {
                ZERO
            }
        });
        let full = apply_g0(0.9, Branch::Incoming, &f).unwrap();
        let boxed = G0Convolver::for_sources(0.9, 0, Branch::Incoming, g, (13, 11), 9)
            .unwrap()
            .apply(&f);
        assert!(full.sub(&boxed).norm_l2() < 1e-13 * full.norm_l2());
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = Grid2D::new(16, 4.0).unwrap();
        let f = GridFunction::from_real_fn(g, |x, y| (-(x * x + 2.0 * y * y)).exp());
        let lam = 0.7;
        let out = apply_g0(lam, Branch::Outgoing, &f).unwrap();
        let h = g.h();
        let diag = resolvent_self_cell(lam, h, 0, Branch::Outgoing).unwrap();
        for probe in [0usize, 37, 200] {
            let (i, j) = (probe / 16, probe % 16);
            let mut s = ZERO;
            for q in 0..g.len() {
                let (a, b) = (q / 16, q % 16);
                let r = h * (((i as f64 - a as f64).powi(2) + (j as f64 - b as f64).powi(2)).sqrt());
                let k = if r == 0.0 {
                    diag
                } else {
                    resolvent_kernel_deriv(lam, r, 0, Branch::Outgoing).unwrap()
                };
                s += k * f.values[q] * h * h;
            }
            assert!((s - out.values[probe]).norm() < 1e-12 * s.norm().max(1e-3));
        }
    }
}
