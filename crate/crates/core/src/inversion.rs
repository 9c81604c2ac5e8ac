//! Block inversion lemmas and small-λ expansions of M(λ)⁻¹.

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::dense::{symmetric_eigen, DenseOperator, Inverted};
use crate::error::{Error, Result};
use crate::ops::build_m_on;
use crate::potential::ActiveSet;
use crate::specfun::g_threshold;
use crate::threshold::{QFrame, SingularityKind, ThresholdOperators, ThresholdReport};

/// Complementary projections p + q = 1.
#[derive(Clone, Debug)]
pub struct BlockSplit {
    pub p_proj: DenseOperator,
    pub q_proj: DenseOperator,
}

impl BlockSplit {
    pub fn new(p_proj: DenseOperator) -> Result<Self> {
        let n = p_proj.nrows();
        if n != p_proj.ncols() {
            return Err(Error::Argument("projection must be square".into()));
        }
        let q_proj = DenseOperator::identity(n, p_proj.cell_area).sub(&p_proj);
        let split = Self { p_proj, q_proj };
        let scale = (n as f64).sqrt().max(1.0);
        if split.p_proj.mul(&split.p_proj).sub(&split.p_proj).hs_norm() > 1e-12 * scale
            || split.p_proj.mul(&split.q_proj).hs_norm() > 1e-12 * scale
        {
            return Err(Error::Argument("p is not a projection".into()));
        }
        Ok(split)
    }

    /// Projection onto the span of the first `k` coordinates.
    pub fn coordinate(n: usize, k: usize) -> Self {
        let p = DenseOperator::from_real_fn(n, n, 1.0, |i, j| if i == j && i < k { 1.0 } else { 0.0 });
        let q = DenseOperator::identity(n, 1.0).sub(&p);
        Self { p_proj: p, q_proj: q }
    }
}

/// Basis of the range of a projection: columns of the projection with pivoted Gram–Schmidt.
fn range_basis(p: &DenseOperator) -> Mat<c64> {
    let n = p.nrows();
    let mut cols: Vec<Vec<c64>> = vec![];
    let mut remaining: Vec<Vec<c64>> = (0..n).map(|j| (0..n).map(|i| p.matrix[(i, j)]).collect()).collect();
    let scale = p.hs_norm().max(1.0);
    loop {
        let (best, norm) = remaining
            .iter()
            .enumerate()
            .map(|(j, c)| (j, c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || norm < 1e-8 * scale {
            break;
        }
        let q: Vec<c64> = remaining[best].iter().map(|x| x / norm).collect();
        for c in remaining.iter_mut() {
            let d: c64 = q.iter().zip(c.iter()).map(|(a, b)| a.conj() * b).sum();
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= d * qi;
            }
        }
        cols.push(q);
    }
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn block(m: &Mat<c64>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DenseOperator {
    let r0 = rows.start;
    let c0 = cols.start;
    DenseOperator::from_fn(rows.len(), cols.len(), 1.0, |i, j| m[(r0 + i, c0 + j)])
}

/// A⁻¹ assembled from the Schur complement d = (a₁₁ − a₁₂a₂₂⁻¹a₂₁)⁻¹.
pub fn feshbach_invert(a: &DenseOperator, split: &BlockSplit) -> Result<DenseOperator> {
    let n = a.nrows();
    let x1 = range_basis(&split.p_proj);
    let x2 = range_basis(&split.q_proj);
    let k = x1.ncols();
    if k + x2.ncols() != n {
        return Err(Error::Argument("projections do not span the space".into()));
    }
    let x = Mat::from_fn(n, n, |i, j| if j < k { x1[(i, j)] } else { x2[(i, j - k)] });
    let y = DenseOperator::new(x.clone(), 1.0).invert_named("basis")?.inverse.matrix;
    let at = &y * &a.matrix * &x;
    let a11 = block(&at, 0..k, 0..k);
    let a12 = block(&at, 0..k, k..n);
    let a21 = block(&at, k..n, 0..k);
    let a22 = block(&at, k..n, k..n);
    let a22i = a22.invert_named("a22")?.inverse;
    let d = a11.sub(&a12.mul(&a22i).mul(&a21)).invert_named("d")?.inverse;
    let b12 = d.mul(&a12).mul(&a22i).scale(c64::new(-1.0, 0.0));
    let b21 = a22i.mul(&a21).mul(&d).scale(c64::new(-1.0, 0.0));
    let b22 = a22i.add(&a22i.mul(&a21).mul(&d).mul(&a12).mul(&a22i));
    let inv_t = Mat::from_fn(n, n, |i, j| match (i < k, j < k) {
        (true, true) => d.at(i, j),
        (true, false) => b12.at(i, j - k),
        (false, true) => b21.at(i - k, j),
        (false, false) => b22.at(i - k, j - k),
    });
    Ok(DenseOperator::new(&x * inv_t * &y, a.cell_area))
}

/// Jensen–Nenciu inversion with an orthogonal projection S.
/// Returns `Error::Singular` when B = S − S(A+S)⁻¹S is singular, i.e. A is singular.
pub fn jn_invert(a: &DenseOperator, s: &DenseOperator) -> Result<DenseOperator> {
    jn_invert_basis(a, &range_basis(s))
}

/// Jensen–Nenciu inversion with S = X Xᴴ for an orthonormal basis X.
pub fn jn_invert_basis(a: &DenseOperator, x: &Mat<c64>) -> Result<DenseOperator> {
    let s = x * x.adjoint();
    let a_s = DenseOperator::new(&a.matrix + &s, a.cell_area);
    let r = a_s.invert_named("A+S")?.inverse;
    let k = x.ncols();
    let b = DenseOperator::new(Mat::<c64>::identity(k, k) - x.adjoint() * &r.matrix * x, 1.0);
    let b_inv = match b.invert_named("B") {
        Ok(inv) => inv.inverse,
        Err(Error::SingularBlock { .. }) => return Err(Error::Singular),
        Err(e) => return Err(e),
    };
    let sbs = x * &b_inv.matrix * x.adjoint();
    Ok(DenseOperator::new(&r.matrix + &r.matrix * sbs * &r.matrix, a.cell_area))
}

/// Dense LU inverse of M(λ) = U + vG₀(λ)v on the active set.
pub fn invert_m_direct(lambda: f64, active: &ActiveSet) -> Result<Inverted> {
    build_m_on(lambda, active)?.invert_named("M")
}

/// Scalar λ-profiles multiplying the expansion terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarProfile {
    One,
    /// (g₁ + c₁)⁻¹
    H,
    /// (g₁ + c₂)⁻¹
    H1,
    H1Inv,
    G,
    GInv,
    /// −(c₃ h₁)⁻¹
    H2Inv,
    /// −g⁻¹λ⁻² d_jk(λ) with D(λ) = C(λ)⁻¹ on S₂
    LeadingEntry {
        j: usize,
        k: usize,
    },
}

/// Small matrix data for the S₂-block C(λ) = T + g(λ)⁻¹T̃.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoreBlock {
    pub t: Vec<Vec<f64>>,
    pub t_tilde: Vec<Vec<f64>>,
    /// dim of X₂ = S₂ ⊖ S₃ (leading basis vectors); the rest span S₃.
    pub leading_dim: usize,
}

impl CoreBlock {
    fn dim(&self) -> usize {
        self.t.len()
    }

    /// C(λ) in the S₂ basis.
    pub fn c_matrix(&self, g: c64) -> DenseOperator {
        let m = self.dim();
        DenseOperator::from_fn(m, m, 1.0, |i, j| self.t[i][j] + self.t_tilde[i][j] / g)
    }

    /// D(λ) = C(λ)⁻¹; uses the g T₃⁻¹ + L₄ structure when S₃ ≠ 0.
    pub fn d_matrix(&self, g: c64) -> Result<DenseOperator> {
        let m = self.dim();
        let l = self.leading_dim;
        if l == m {
            return Ok(self.c_matrix(g).invert_named("C(λ)")?.inverse);
        }
        let tt = |r: std::ops::Range<usize>, c: std::ops::Range<usize>| {
            let (r0, c0) = (r.start, c.start);
            DenseOperator::from_real_fn(r.len(), c.len(), 1.0, |i, j| self.t_tilde[r0 + i][c0 + j])
        };
        let t33i = tt(l..m, l..m).invert_named("T₃")?.inverse;
        let mut out = t33i.scale(g);
        if l > 0 {
            let t22 = DenseOperator::from_real_fn(l, l, 1.0, |i, j| self.t[i][j]);
            let t23 = tt(0..l, l..m);
            let t32 = tt(l..m, 0..l);
            let schur = tt(0..l, 0..l).sub(&t23.mul(&t33i).mul(&t32));
            // d̃ = T₂₂⁻¹(1 + g⁻¹ schur T₂₂⁻¹)⁻¹
            let t22i = t22.invert_named("T₂₂")?.inverse;
            let inner = DenseOperator::identity(l, 1.0).add(&schur.mul(&t22i).scale(g.inv()));
            let dt = t22i.mul(&inner.invert_named("d̃")?.inverse);
            let a12 = dt.mul(&t23).mul(&t33i).scale(c64::new(-1.0, 0.0));
            let a21 = t33i.mul(&t32).mul(&dt).scale(c64::new(-1.0, 0.0));
            let a22 = t33i.mul(&t32).mul(&dt).mul(&t23).mul(&t33i);
            let lower = out.add(&a22);
            out = DenseOperator::from_fn(m, m, 1.0, |i, j| match (i < l, j < l) {
                (true, true) => dt.at(i, j),
                (true, false) => a12.at(i, j - l),
                (false, true) => a21.at(i - l, j),
                (false, false) => lower.at(i - l, j - l),
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct ExpansionTerm {
    pub profile: ScalarProfile,
    pub op: DenseOperator,
    pub rank: usize,
}

/// M(λ)⁻¹ ≈ Σ profile(λ)·op, with remainder 𝒪(λ^a |log λ|^b).
#[derive(Clone, Debug)]
pub struct InverseExpansion {
    pub kind: SingularityKind,
    pub terms: Vec<ExpansionTerm>,
    pub remainder_order: (f64, f64),
    pub band: (f64, f64),
    pub v_norm_sq: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub core: Option<CoreBlock>,
}

impl InverseExpansion {
    pub fn g1(&self, lambda: f64) -> Result<c64> {
        Ok(g_threshold(lambda)? * self.v_norm_sq)
    }

    pub fn h(&self, lambda: f64) -> Result<c64> {
        let c1 = self
            .c1
            .ok_or_else(|| Error::Misuse("h(λ) is defined for regular expansions".into()))?;
        Ok((self.g1(lambda)? + c1).inv())
    }

    pub fn h1(&self, lambda: f64) -> Result<c64> {
        let c2 = self
            .c2
            .ok_or_else(|| Error::Misuse("h₁(λ) is defined for singular expansions".into()))?;
        Ok((self.g1(lambda)? + c2).inv())
    }

    pub fn profile(&self, p: ScalarProfile, lambda: f64) -> Result<c64> {
        let g = g_threshold(lambda)?;
        Ok(match p {
            ScalarProfile::One => c64::new(1.0, 0.0),
            ScalarProfile::H => self.h(lambda)?,
            ScalarProfile::H1 => self.h1(lambda)?,
            ScalarProfile::H1Inv => self.h1(lambda)?.inv(),
            ScalarProfile::G => g,
            ScalarProfile::GInv => g.inv(),
            ScalarProfile::H2Inv => {
                let c3 = self.c3.ok_or_else(|| Error::Misuse("h₂ needs c₃".into()))?;
                -(self.h1(lambda)? * c3).inv()
            }
            ScalarProfile::LeadingEntry { j, k } => {
                let core = self.core.as_ref().ok_or_else(|| Error::Misuse("no S₂ block".into()))?;
                -core.d_matrix(g)?.at(j, k) / (g * lambda * lambda)
            }
        })
    }

    pub fn eval(&self, lambda: f64) -> Result<DenseOperator> {
        let first = &self.terms[0].op;
        let mut out = DenseOperator::zeros(first.nrows(), first.cell_area);
        let mut d_cache: Option<DenseOperator> = None;
        let g = g_threshold(lambda)?;
        for t in &self.terms {
            let s = match t.profile {
                ScalarProfile::LeadingEntry { j, k } => {
                    if d_cache.is_none() {
                        d_cache = Some(self.core.as_ref().unwrap().d_matrix(g)?);
                    }
                    -d_cache.as_ref().unwrap().at(j, k) / (g * lambda * lambda)
                }
                p => self.profile(p, lambda)?,
            };
            out = out.add_scaled(s, &t.op);
        }
        Ok(out)
    }

    pub fn report_terms(&self) -> Vec<TermSummary> {
        self.terms
            .iter()
            .map(|t| TermSummary {
                profile: t.profile,
                rank: t.rank,
                hs_norm: t.op.hs_norm(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSummary {
    pub profile: ScalarProfile,
    pub rank: usize,
    pub hs_norm: f64,
}

pub const DEFAULT_BAND: (f64, f64) = (1e-3, 1e-1);

fn outer(a: &[f64], b: &[f64], cell_area: f64) -> DenseOperator {
    DenseOperator::from_real_fn(a.len(), b.len(), cell_area, |i, j| a[i] * b[j])
}

fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

/// R = Z (ZᵀAZ + extra)⁻¹ Zᵀ with Z the complement frame of v̂.
fn q_inverse(frame: &QFrame, restricted: &Mat<f64>, cell_area: f64, block: &'static str) -> Result<Mat<f64>> {
    let inv = DenseOperator::from_real(restricted, cell_area)
        .invert_named(block)?
        .inverse
        .real_part();
    let m = inv.nrows();
    let z = frame.lift_columns(&Mat::<f64>::identity(m, m));
    Ok(&z * inv * z.transpose())
}

/// Pieces shared by every expansion: R = Q(·)⁻¹Q, c = ⟨v̂, T₀v̂⟩ − ⟨t, R t⟩, L = (v̂ − Rt)(v̂ − Rt)ᵀ.
struct SchurData {
    r: Mat<f64>,
    c: f64,
    l_vec: Vec<f64>,
}

fn schur_data(ops: &ThresholdOperators, kernel: Option<&Mat<f64>>) -> Result<SchurData> {
    let frame = QFrame::new(&ops.v_hat);
    let mut a = frame.restrict(&ops.t0);
    let block = if let Some(k) = kernel {
        // k: kernel basis in full coordinates, rotated into frame coordinates
        let zk = {
            let m = a.nrows();
            let z = frame.lift_columns(&Mat::<f64>::identity(m, m));
            z.transpose() * k
        };
        a = &a + &zk * zk.transpose();
        "QT₀Q+S₁"
    } else {
        "QT₀Q"
    };
    let cell = ops.active.grid.h().powi(2);
    let r = q_inverse(&frame, &a, cell, block)?;
    let t = matvec(&ops.t0, &ops.v_hat);
    let rt = matvec(&r, &t);
    let c =
        ops.v_hat.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() - t.iter().zip(&rt).map(|(a, b)| a * b).sum::<f64>();
    let l_vec = ops.v_hat.iter().zip(&rt).map(|(a, b)| a - b).collect();
    Ok(SchurData { r, c, l_vec })
}

pub fn expand_regular(
    ops: &ThresholdOperators,
    report: &ThresholdReport,
    band: (f64, f64),
) -> Result<InverseExpansion> {
    if report.kind != SingularityKind::Regular {
        return Err(Error::Misuse(format!(
            "expand_regular called for a {} potential",
            report.kind
        )));
    }
    let cell = ops.active.grid.h().powi(2);
    let sd = schur_data(ops, None)?;
    let v_norm = ops.active.v_norm();
    Ok(InverseExpansion {
        kind: SingularityKind::Regular,
        terms: vec![
            ExpansionTerm {
                profile: ScalarProfile::H,
                op: outer(&sd.l_vec, &sd.l_vec, cell),
                rank: 1,
            },
            ExpansionTerm {
                profile: ScalarProfile::One,
                op: DenseOperator::from_real(&sd.r, cell),
                rank: sd.r.nrows() - 1,
            },
        ],
        remainder_order: (2.0, 1.0),
        band,
        v_norm_sq: v_norm * v_norm,
        c1: Some(sd.c),
        c2: None,
        c3: None,
        core: None,
    })
}

pub fn expand_singular(
    ops: &ThresholdOperators,
    report: &ThresholdReport,
    band: (f64, f64),
) -> Result<InverseExpansion> {
    if report.kind == SingularityKind::Regular {
        return Err(Error::Misuse("expand_singular called for a regular potential".into()));
    }
    let cell = ops.active.grid.h().powi(2);
    let v_norm = ops.active.v_norm();
    let sd = schur_data(ops, Some(&report.basis_s1))?;
    let n = ops.active.len();
    let mut terms = vec![
        ExpansionTerm {
            profile: ScalarProfile::H1,
            op: outer(&sd.l_vec, &sd.l_vec, cell),
            rank: 1,
        },
        ExpansionTerm {
            profile: ScalarProfile::One,
            op: DenseOperator::from_real(&sd.r, cell),
            rank: n - 1,
        },
    ];
    let mut out = InverseExpansion {
        kind: report.kind,
        terms: vec![],
        remainder_order: (0.0, 1.0),
        band,
        v_norm_sq: v_norm * v_norm,
        c1: None,
        c2: Some(sd.c),
        c3: None,
        core: None,
    };
    let col = |m: &Mat<f64>, j: usize| -> Vec<f64> { (0..m.nrows()).map(|i| m[(i, j)]).collect() };
    match report.kind {
        SingularityKind::FirstKind => {
            let zeta = col(&report.basis_s1, 0);
            let pz: f64 = matvec(&ops.t0, &zeta).iter().zip(&ops.v_hat).map(|(a, b)| a * b).sum();
            let c3 = pz * pz;
            let l1z: Vec<f64> = {
                let d: f64 = sd.l_vec.iter().zip(&zeta).map(|(a, b)| a * b).sum();
                sd.l_vec.iter().map(|x| x * d).collect()
            };
            let cross = outer(&l1z, &zeta, cell)
                .add(&outer(&zeta, &l1z, cell))
                .scale(c64::new(-1.0 / c3, 0.0));
            terms.push(ExpansionTerm {
                profile: ScalarProfile::H2Inv,
                op: outer(&zeta, &zeta, cell),
                rank: 1,
            });
            terms.push(ExpansionTerm {
                profile: ScalarProfile::One,
                op: cross,
                rank: 2,
            });
            terms.push(ExpansionTerm {
                profile: ScalarProfile::H1,
                op: outer(&l1z, &l1z, cell).scale(c64::new(-1.0 / c3, 0.0)),
                rank: 1,
            });
            out.c3 = Some(c3);
            out.remainder_order = (2.0, 3.0);
        }
        SingularityKind::SecondKind | SingularityKind::ThirdKind => {
            let (basis, leading_dim) = s2_basis(ops, report)?;
            let t = basis.transpose() * &ops.vg1v * &basis;
            let tt = basis.transpose() * &ops.vg2v * &basis;
            let m = basis.ncols();
            let sym = |a: &Mat<f64>| -> Vec<Vec<f64>> {
                (0..m)
                    .map(|i| (0..m).map(|j| 0.5 * (a[(i, j)] + a[(j, i)])).collect())
                    .collect()
            };
            out.core = Some(CoreBlock {
                t: sym(&t),
                t_tilde: sym(&tt),
                leading_dim,
            });
            for j in 0..m {
                for k in 0..m {
                    terms.push(ExpansionTerm {
                        profile: ScalarProfile::LeadingEntry { j, k },
                        op: outer(&col(&basis, j), &col(&basis, k), cell),
                        rank: 1,
                    });
                }
            }
            out.remainder_order = (0.0, 1.0);
        }
        SingularityKind::Regular => unreachable!(),
    }
    out.terms = terms;
    Ok(out)
}

/// Orthonormal S₂ basis ordered as [X₂ eigenvectors of T₂ (κ₁ ≥ κ₂ …), S₃ basis].
fn s2_basis(ops: &ThresholdOperators, report: &ThresholdReport) -> Result<(Mat<f64>, usize)> {
    if report.kind == SingularityKind::SecondKind {
        return Ok((report.basis_s2.clone(), report.basis_s2.ncols()));
    }
    let z2 = &report.basis_s2;
    let t2 = z2.transpose() * &ops.vg1v * z2;
    let (vals, vecs) = symmetric_eigen(&t2)?;
    let threshold = report.stages.get(2).map_or(0.0, |s| s.threshold);
    let mut order: Vec<usize> = (0..vals.len()).filter(|&k| vals[k].abs() >= threshold).collect();
    let l = order.len();
    order.extend((0..vals.len()).filter(|&k| vals[k].abs() < threshold));
    let rot = Mat::from_fn(vals.len(), vals.len(), |i, j| vecs[(i, order[j])]);
    Ok((z2 * rot, l))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub kind: SingularityKind,
    pub terms: Vec<TermSummary>,
    pub remainder_order: (f64, f64),
    /// Fitted slope of log(‖M⁻¹ − E‖_HS / |g|^b) against log λ.
    pub remainder_slope: f64,
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub oracle_conditions: Vec<f64>,
}

/// Geometric λ grid with `per_decade` nodes per decade on [a, b].
pub fn geometric_nodes(band: (f64, f64), per_decade: usize) -> Vec<f64> {
    let (la, lb) = (band.0.log10(), band.1.log10());
    let count = ((lb - la) * per_decade as f64).round().max(1.0) as usize;
    (0..=count)
        .map(|k| 10f64.powf(la + (lb - la) * k as f64 / count as f64))
        .collect()
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Remainder ‖M(λ)⁻¹ − E(λ)‖_HS against the dense oracle on a geometric λ grid.
pub fn certify(exp: &InverseExpansion, active: &ActiveSet, per_decade: usize) -> Result<ExpansionReport> {
    let lambdas = geometric_nodes(exp.band, per_decade);
    let mut residuals = vec![];
    let mut conds = vec![];
    for &lam in &lambdas {
        let oracle = invert_m_direct(lam, active)?;
        conds.push(oracle.condition);
        residuals.push(oracle.inverse.sub(&exp.eval(lam)?).hs_norm());
    }
    let normalized: Vec<f64> = lambdas
        .iter()
        .zip(&residuals)
        .map(|(&l, &r)| r / g_threshold(l).unwrap().norm().powf(exp.remainder_order.1))
        .collect();
    Ok(ExpansionReport {
        kind: exp.kind,
        terms: exp.report_terms(),
        remainder_order: exp.remainder_order,
        remainder_slope: loglog_slope(&lambdas, &normalized),
        lambdas,
        residuals,
        oracle_conditions: conds,
    })
}

/// Eigen-decomposition helper for complex Hermitian projections (used by tests and callers holding S as an operator).
pub fn hermitian_eigenvalues(a: &DenseOperator) -> Result<Vec<f64>> {
    let evd = a
        .matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Inconsistent(format!("eigensolver failed: {e:?}")))?;
    Ok(evd.S().column_vector().iter().map(|x| x.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feshbach_two_by_two() {
        let a = DenseOperator::from_real_fn(2, 2, 1.0, |i, j| [[1.0, 2.0], [3.0, 4.0]][i][j]);
        let inv = feshbach_invert(&a, &BlockSplit::coordinate(2, 1)).unwrap();
        assert!((inv.at(0, 0) - c64::new(-2.0, 0.0)).norm() < 1e-14);
        let direct = a.invert().unwrap().inverse;
        assert!(inv.sub(&direct).hs_norm() < 1e-13);
    }

    #[test]
    fn feshbach_block_diagonal() {
        let a = DenseOperator::from_real_fn(4, 4, 1.0, |i, j| match (i < 2, j < 2) {
            (true, true) | (false, false) => {
                if i == j {
                    2.0 + i as f64
                } else {
                    0.3
                }
            }
            _ => 0.0,
        });
        let inv = feshbach_invert(&a, &BlockSplit::coordinate(4, 2)).unwrap();
        for i in 0..2 {
            for j in 2..4 {
                assert!(inv.at(i, j).norm() < 1e-15 && inv.at(j, i).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn jn_scalar_cases() {
        let a = DenseOperator::from_real_fn(2, 2, 1.0, |i, j| if i == j { [3.0, 2.0][i] } else { 0.0 });
        let s = DenseOperator::from_real_fn(2, 2, 1.0, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        let inv = jn_invert(&a, &s).unwrap();
        assert!((inv.at(0, 0).re - 1.0 / 3.0).abs() < 1e-15);
        let a0 = DenseOperator::from_real_fn(2, 2, 1.0, |i, j| if i == j { [0.0, 2.0][i] } else { 0.0 });
        assert!(matches!(jn_invert(&a0, &s), Err(Error::Singular)));
    }

    #[test]
    fn core_block_structure_matches_direct_inverse() {
        let core = CoreBlock {
            t: vec![vec![-2.0, 0.0, 0.0], vec![0.0, -0.5, 0.0], vec![0.0, 0.0, 0.0]],
            t_tilde: vec![vec![0.3, 0.1, 0.2], vec![0.1, -0.4, 0.05], vec![0.2, 0.05, 0.7]],
            leading_dim: 2,
        };
        for g in [c64::new(-1.1, 0.25), c64::new(-3.0, 0.25)] {
            let d = core.d_matrix(g).unwrap();
            let e = d.mul(&core.c_matrix(g)).sub(&DenseOperator::identity(3, 1.0)).hs_norm();
            assert!(e < 1e-12, "{e}");
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = geometric_nodes((1e-3, 1e-1), 20);
        assert_eq!(x.len(), 41);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
