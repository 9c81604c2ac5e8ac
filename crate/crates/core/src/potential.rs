//! Potentials on the grid, their factorization V = v·w and the active sample set.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridFunction};

/// Nodes with v ≤ this fraction of max v are dropped from sandwiched operators.
pub const ACTIVE_THRESHOLD: f64 = 1e-9;
/// Allowed fraction of ‖V‖₁ in the outer tenth of the box.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Built-in attractive shapes (peak depth 1); the coupling multiplies them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// −exp(−|x−c|²/w²)
    Gaussian {
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// −exp(−(|x−c|−r₀)²/w²)
    Ring {
        radius: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Two Gaussian wells at c ± (d, 0); its odd channel carries p-wave resonances.
    Ell1Dipole {
        separation: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Four Gaussian wells at c ± (d, 0), c ± (0, d); its quadrupolar channels
    /// carry zero-energy eigenvalues without resonances.
    Clover {
        separation: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Real part of a stored grid function (binary or CSV grid format).
    Tabulated { file: PathBuf },
}

impl Profile {
    pub fn gaussian(width: f64) -> Self {
        Profile::Gaussian {
            width,
            center: [0.0, 0.0],
        }
    }

    fn wells(&self) -> Option<(Vec<[f64; 2]>, f64)> {
        match *self {
            Profile::Gaussian { width, center } => Some((vec![center], width)),
            Profile::Ell1Dipole {
                separation: d,
                width,
                center: c,
            } => Some((vec![[c[0] + d, c[1]], [c[0] - d, c[1]]], width)),
            Profile::Clover {
                separation: d,
                width,
                center: c,
            } => Some((
                vec![[c[0] + d, c[1]], [c[0] - d, c[1]], [c[0], c[1] + d], [c[0], c[1] - d]],
                width,
            )),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Profile::Gaussian { width, .. } => check("width", *width),
            Profile::Ring { radius, width, .. } => check("radius", *radius).and(check("width", *width)),
            Profile::Ell1Dipole { separation, width, .. } | Profile::Clover { separation, width, .. } => {
                check("separation", *separation).and(check("width", *width))
            }
            Profile::Tabulated { file } => {
                if file.exists() {
                    Ok(())
                } else {
                    Err(Error::Io(std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("potential file {} not found", file.display()),
                    )))
                }
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if let Some((centers, w)) = self.wells() {
            return -centers
                .iter()
                .map(|c| (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (w * w)).exp())
                .sum::<f64>();
        }
        match *self {
            Profile::Ring { radius, width, center } => {
                let r = (x - center[0]).hypot(y - center[1]);
                -(-((r - radius) / width).powi(2)).exp()
            }
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    /// Claimed γ with ⟨x⟩^γ V ∈ L¹ (metadata only).
    pub decay_gamma: f64,
}

impl Potential {
    pub fn new(grid: Grid2D, values: Vec<f64>, decay_gamma: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument("potential size does not match grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite potential values".into()));
        }
        Ok(Self {
            grid,
            values,
            decay_gamma,
        })
    }

    pub fn zero(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            decay_gamma: f64::MAX,
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let g = GridFunction::from_real_fn(grid, f);
        Self {
            grid,
            values: g.values.iter().map(|v| v.re).collect(),
            decay_gamma: 10.0,
        }
    }

    pub fn from_profile(grid: Grid2D, profile: &Profile, coupling: f64) -> Result<Self> {
        profile.validate()?;
        if let Profile::Tabulated { file } = profile {
            let f = read_grid_file(file)?;
            if f.grid != grid {
                return Err(Error::InvalidInput(format!(
                    "tabulated potential is on n={} L={}, run grid is n={} L={}",
                    f.grid.n, f.grid.half_width, grid.n, grid.half_width
                )));
            }
            let values = f.values.iter().map(|v| coupling * v.re).collect();
            return Potential::new(grid, values, 2.0);
        }
        let mut p = Self::from_fn(grid, |x, y| coupling * profile.eval(x, y));
        p.decay_gamma = 10.0;
        Ok(p)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
            ..self.clone()
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.h().powi(2)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Fraction of ‖V‖₁ on nodes with max(|x|, |y|) > 0.9L.
    pub fn tail_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let n = self.grid.n;
        let lim = 0.9 * self.grid.half_width;
        let tail: f64 = (0..n * n)
            .filter(|&k| {
                let (x, y) = self.grid.point(k);
                x.abs().max(y.abs()) > lim
            })
            .map(|k| self.values[k].abs())
            .sum();
        tail / total
    }

    pub fn check_support(&self) -> Result<()> {
        let t = self.tail_fraction();
        if t > TAIL_TOLERANCE {
            return Err(Error::Geometry(format!(
                "potential tail fraction {t:.2e} exceeds {TAIL_TOLERANCE:e}"
            )));
        }
        Ok(())
    }

    pub fn translate_cells(&self, di: i64, dj: i64) -> Self {
        let g = self.to_grid_function().translate_cells(di, dj);
        Self {
            values: g.values.iter().map(|v| v.re).collect(),
            ..self.clone()
        }
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            space: crate::grid::Space::Physical,
            values: self.values.iter().map(|&v| c64::new(v, 0.0)).collect(),
        }
    }
}

pub fn read_grid_file(path: &Path) -> Result<GridFunction> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => GridFunction::read_csv(path),
        _ => GridFunction::read_binary(path),
    }
}

/// U = sign(V) (with U = 1 where V = 0), v = |V|^{1/2}, w = Uv.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredPotential {
    pub grid: Grid2D,
    pub sign: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn factor_potential(pot: &Potential) -> FactoredPotential {
    let sign: Vec<f64> = pot.values.iter().map(|&x| if x >= 0.0 { 1.0 } else { -1.0 }).collect();
    let v: Vec<f64> = pot.values.iter().map(|x| x.abs().sqrt()).collect();
    let w = sign.iter().zip(&v).map(|(s, v)| s * v).collect();
    FactoredPotential {
        grid: pot.grid,
        sign,
        v,
        w,
    }
}

impl FactoredPotential {
    pub fn active(&self) -> Result<ActiveSet> {
        let vmax = self.v.iter().fold(0.0f64, |m, &x| m.max(x));
        if vmax == 0.0 {
            return Err(Error::EmptyOperator);
        }
        let n = self.grid.n;
        let nodes: Vec<usize> = (0..n * n).filter(|&k| self.v[k] > ACTIVE_THRESHOLD * vmax).collect();
        let pick = |a: &[f64]| nodes.iter().map(|&k| a[k]).collect::<Vec<_>>();
        Ok(ActiveSet {
            grid: self.grid,
            ij: nodes.iter().map(|&k| ((k / n) as i64, (k % n) as i64)).collect(),
            v: pick(&self.v),
            w: pick(&self.w),
            sign: pick(&self.sign),
            nodes,
        })
    }

    pub fn potential(&self) -> Potential {
        Potential {
            grid: self.grid,
            values: self.v.iter().zip(&self.w).map(|(a, b)| a * b).collect(),
            decay_gamma: 10.0,
        }
    }
}

/// Grid nodes where v is non-negligible, with the factor values restricted to them.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub grid: Grid2D,
    pub nodes: Vec<usize>,
    pub ij: Vec<(i64, i64)>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub sign: Vec<f64>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|&k| self.grid.point(k)).collect()
    }

    /// Lower corner and side of the smallest index square containing the active nodes.
    pub fn bounding_box(&self) -> ((usize, usize), usize) {
        let lo_i = self.ij.iter().map(|p| p.0).min().unwrap_or(0);
        let lo_j = self.ij.iter().map(|p| p.1).min().unwrap_or(0);
        let n = self.grid.n;
        let side = (self.span() + 1).min(n);
        let clamp = |lo: i64| (lo.max(0) as usize).min(n - side);
        ((clamp(lo_i), clamp(lo_j)), side)
    }

    /// Largest index offset between two active nodes along either axis.
    pub fn span(&self) -> usize {
        let (mut lo_i, mut hi_i, mut lo_j, mut hi_j) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for &(i, j) in &self.ij {
            lo_i = lo_i.min(i);
            hi_i = hi_i.max(i);
            lo_j = lo_j.min(j);
            hi_j = hi_j.max(j);
        }
        (hi_i - lo_i).max(hi_j - lo_j).max(0) as usize
    }

    /// Restrict grid values to the active set in weighted coordinates (f·h).
    pub fn to_coords(&self, f: &GridFunction) -> Vec<c64> {
        let h = self.grid.h();
        self.nodes.iter().map(|&k| f.values[k] * h).collect()
    }

    /// Inverse of [`ActiveSet::to_coords`], zero off the active set.
    pub fn from_coords(&self, c: &[c64]) -> GridFunction {
        let h = self.grid.h();
        let mut out = GridFunction::zeros(self.grid);
        for (&k, &x) in self.nodes.iter().zip(c) {
            out.values[k] = x / h;
        }
        out
    }

    /// v in weighted coordinates.
    pub fn v_coords(&self) -> Vec<c64> {
        let h = self.grid.h();
        self.v.iter().map(|&x| c64::new(x * h, 0.0)).collect()
    }

    pub fn v_norm(&self) -> f64 {
        (self.v.iter().map(|x| x * x).sum::<f64>()).sqrt() * self.grid.h()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_is_exact() {
        let g = Grid2D::new(16, 4.0).unwrap();
        let mut vals = vec![0.0; g.len()];
        vals[5] = -3.0;
        vals[6] = 2.0;
        let p = Potential::new(g, vals, 2.0).unwrap();
        let fp = factor_potential(&p);
        assert_eq!(fp.sign[5], -1.0);
        assert!((fp.v[5] - 3f64.sqrt()).abs() < 1e-15);
        assert!((fp.w[5] + 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(fp.sign[0], 1.0);
        let back = fp.potential();
        let err = back
            .values
            .iter()
            .zip(&p.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-15);
    }

    #[test]
    fn nonnegative_potential_has_w_equal_v() {
        let g = Grid2D::new(16, 4.0).unwrap();
        let p = Potential::from_fn(g, |x, y| (-(x * x + y * y)).exp());
        let fp = factor_potential(&p);
        assert_eq!(fp.v, fp.w);
    }

    #[test]
    fn zero_potential_has_no_active_set() {
        let g = Grid2D::new(16, 4.0).unwrap();
        assert!(matches!(
            factor_potential(&Potential::zero(g)).active(),
            Err(Error::EmptyOperator)
        ));
    }

    #[test]
    fn profile_json_round_trip() {
        let p = Profile::Ring {
            radius: 2.0,
            width: 0.5,
            center: [0.0, 1.0],
        };
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"profile\":\"ring\""));
        assert_eq!(serde_json::from_str::<Profile>(&s).unwrap(), p);
    }
}
