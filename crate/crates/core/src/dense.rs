//! Dense operators in weighted sample coordinates.
//!
//! A function f on the sample set is stored as f(x_a)·√w with w the cell area, so
//! integral operators become K(x_a − x_b)·w, multiplication operators become
//! diagonal matrices, the bilinear pairing is the plain dot product and the
//! Hilbert–Schmidt norm is the Frobenius norm.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

const ZERO: c64 = c64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: Mat<c64>,
    /// Quadrature weight of one sample (h² on a grid, 1 for abstract matrices).
    pub cell_area: f64,
}

/// Inverse together with a Frobenius condition estimate.
#[derive(Clone, Debug)]
pub struct Inverted {
    pub inverse: DenseOperator,
    pub condition: f64,
}

impl DenseOperator {
    pub fn new(matrix: Mat<c64>, cell_area: f64) -> Self {
        Self { matrix, cell_area }
    }

    pub fn from_fn(rows: usize, cols: usize, cell_area: f64, f: impl Fn(usize, usize) -> c64) -> Self {
        Self::new(Mat::from_fn(rows, cols, f), cell_area)
    }

    pub fn from_real_fn(rows: usize, cols: usize, cell_area: f64, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::from_fn(rows, cols, cell_area, |i, j| c64::new(f(i, j), 0.0))
    }

    pub fn zeros(n: usize, cell_area: f64) -> Self {
        Self::new(Mat::zeros(n, n), cell_area)
    }

    pub fn identity(n: usize, cell_area: f64) -> Self {
        Self::new(Mat::identity(n, n), cell_area)
    }

    pub fn diagonal(d: &[c64], cell_area: f64) -> Self {
        let n = d.len();
        Self::from_fn(n, n, cell_area, |i, j| if i == j { d[i] } else { ZERO })
    }

    /// a ⊗ b: x ↦ a ⟨x, b⟩ (bilinear, no conjugation).
    pub fn outer(a: &[c64], b: &[c64], cell_area: f64) -> Self {
        Self::from_fn(a.len(), b.len(), cell_area, |i, j| a[i] * b[j])
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn at(&self, i: usize, j: usize) -> c64 {
        self.matrix[(i, j)]
    }

    pub fn hs_norm(&self) -> f64 {
        self.matrix.norm_l2()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::new(&self.matrix * &rhs.matrix, self.cell_area)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::new(&self.matrix + &rhs.matrix, self.cell_area)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::new(&self.matrix - &rhs.matrix, self.cell_area)
    }

    pub fn scale(&self, s: c64) -> Self {
        Self::from_fn(self.nrows(), self.ncols(), self.cell_area, |i, j| {
            s * self.matrix[(i, j)]
        })
    }

    pub fn add_scaled(&self, s: c64, rhs: &Self) -> Self {
        Self::from_fn(self.nrows(), self.ncols(), self.cell_area, |i, j| {
            self.matrix[(i, j)] + s * rhs.matrix[(i, j)]
        })
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.matrix.transpose().to_owned(), self.cell_area)
    }

    pub fn trace(&self) -> c64 {
        (0..self.nrows().min(self.ncols())).map(|i| self.matrix[(i, i)]).sum()
    }

    /// ‖A − Aᵀ‖_HS / ‖A‖_HS
    pub fn asymmetry(&self) -> f64 {
        let n = self.hs_norm();
        if n == 0.0 {
            return 0.0;
        }
        self.sub(&self.transpose()).hs_norm() / n
    }

    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        assert_eq!(x.len(), self.ncols());
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Multiply by diag(l) on the left and diag(r) on the right.
    pub fn sandwich(&self, l: &[f64], r: &[f64]) -> Self {
        Self::from_fn(self.nrows(), self.ncols(), self.cell_area, |i, j| {
            l[i] * self.matrix[(i, j)] * r[j]
        })
    }

    pub fn invert(&self) -> Result<Inverted> {
        self.invert_named("matrix")
    }

    pub fn invert_named(&self, block: &'static str) -> Result<Inverted> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(Error::Argument(format!("{block}: inverse of a non-square matrix")));
        }
        if n == 0 {
            return Ok(Inverted {
                inverse: self.clone(),
                condition: 1.0,
            });
        }
        let inv = self.matrix.partial_piv_lu().inverse();
        let norm_inv = inv.norm_l2();
        let condition = self.hs_norm() * norm_inv / n as f64;
        if !norm_inv.is_finite() || condition > 1e15 {
            return Err(Error::SingularBlock {
                block,
                detail: format!("condition estimate {condition:.3e}"),
            });
        }
        Ok(Inverted {
            inverse: Self::new(inv, self.cell_area),
            condition,
        })
    }

    pub fn solve(&self, rhs: &Self) -> Self {
        Self::new(self.matrix.partial_piv_lu().solve(&rhs.matrix), self.cell_area)
    }

    pub fn solve_vec(&self, b: &[c64]) -> Vec<c64> {
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.matrix.partial_piv_lu().solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// LU solve that reports a numerically singular matrix as `SingularBlock`.
    pub fn solve_checked(&self, b: &[c64], block: &'static str) -> Result<Vec<c64>> {
        let x = self.solve_vec(b);
        let (nb, nx) = (norm(b), norm(&x));
        let growth = nx * self.hs_norm() / (nb.max(f64::MIN_POSITIVE) * self.nrows().max(1) as f64);
        if !nx.is_finite() || growth > 1e15 {
            return Err(Error::SingularBlock {
                block,
                detail: format!("solution growth {growth:.3e}"),
            });
        }
        Ok(x)
    }

    /// Real part as a dense real matrix (for operators that are real in exact arithmetic).
    pub fn real_part(&self) -> Mat<f64> {
        Mat::from_fn(self.nrows(), self.ncols(), |i, j| self.matrix[(i, j)].re)
    }

    pub fn from_real(m: &Mat<f64>, cell_area: f64) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), cell_area, |i, j| c64::new(m[(i, j)], 0.0))
    }

    pub fn max_imag(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                m = m.max(self.matrix[(i, j)].im.abs());
            }
        }
        m
    }

    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(std::fs::File::create(path)?);
        f.write_all(DUMP_MAGIC)?;
        f.write_all(&1u32.to_le_bytes())?;
        f.write_all(&(self.nrows() as u64).to_le_bytes())?;
        f.write_all(&(self.ncols() as u64).to_le_bytes())?;
        f.write_all(&self.cell_area.to_le_bytes())?;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let v = self.matrix[(i, j)];
                f.write_all(&v.re.to_le_bytes())?;
                f.write_all(&v.im.to_le_bytes())?;
            }
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let mut f = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Format("not an operator dump".into()));
        }
        let mut b4 = [0u8; 4];
        f.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(Error::Format("unsupported dump version".into()));
        }
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let rows = u64::from_le_bytes(b8) as usize;
        f.read_exact(&mut b8)?;
        let cols = u64::from_le_bytes(b8) as usize;
        f.read_exact(&mut b8)?;
        let cell_area = f64::from_le_bytes(b8);
        let mut data = vec![ZERO; rows * cols];
        for v in data.iter_mut() {
            f.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            f.read_exact(&mut b8)?;
            *v = c64::new(re, f64::from_le_bytes(b8));
        }
        Ok(Self::from_fn(rows, cols, cell_area, |i, j| data[i * cols + j]))
    }
}

const DUMP_MAGIC: &[u8; 4] = b"T2OP";

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((vec![], Mat::zeros(0, 0)));
    }
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Inconsistent(format!("eigensolver failed: {e:?}")))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn singular_values(a: &DenseOperator) -> Result<Vec<f64>> {
    a.matrix
        .singular_values()
        .map_err(|e| Error::Inconsistent(format!("svd failed: {e:?}")))
}

pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_identity() {
        let a = DenseOperator::from_real_fn(3, 3, 1.0, |i, j| if i == j { 3.0 } else { 0.5 });
        let inv = a.invert().unwrap().inverse;
        let e = a.mul(&inv).sub(&DenseOperator::identity(3, 1.0)).hs_norm();
        assert!(e < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseOperator::from_real_fn(2, 2, 1.0, |_, _| 1.0);
        assert!(matches!(a.invert(), Err(Error::SingularBlock { .. })));
    }

    #[test]
    fn dump_round_trip() {
        let a = DenseOperator::from_fn(3, 2, 0.25, |i, j| c64::new(i as f64, j as f64 - 0.5));
        let dir = std::env::temp_dir().join(format!("t2op-{}", std::process::id()));
        a.write_dump(&dir).unwrap();
        let b = DenseOperator::read_dump(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(b.cell_area, 0.25);
        assert!(a.sub(&b).hs_norm() == 0.0);
    }
}
