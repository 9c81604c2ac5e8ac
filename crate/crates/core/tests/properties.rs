//! Property-based invariants across the numerical kernels.

use proptest::prelude::*;
use thresh2d::c64;
use thresh2d::dense::DenseOperator;
use thresh2d::grid::{chi_cutoff, fourier_forward, fourier_inverse, CutoffSide, Grid2D, GridFunction};
use thresh2d::inversion::{feshbach_invert, geometric_nodes, jn_invert, loglog_slope, BlockSplit};
use thresh2d::specfun::{bessel_j_orders, hankel_integral, hankel_interpolated, hankel_series};

fn matrix(n: usize, entries: &[(f64, f64)]) -> DenseOperator {
    let scale = 1.0 / (n as f64).sqrt();
    DenseOperator::from_fn(n, n, 1.0, |i, j| {
        let (re, im) = entries[i * n + j];
        c64::new(re, im) * scale + if i == j { 2.0 } else { 0.0 }
    })
}

/// Orthogonal projection onto the first k coordinates after a unitary-free shuffle of the basis.
fn coordinate_projection(n: usize, k: usize) -> DenseOperator {
    DenseOperator::from_fn(n, n, 1.0, |i, j| {
        if i == j && i < k {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feshbach_and_jn_reproduce_direct_inverse(
        n in 2usize..12,
        k_frac in 0.1f64..0.9,
        entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 144),
    ) {
        let a = matrix(n, &entries);
        let k = ((n as f64 * k_frac) as usize).clamp(1, n - 1);
        let p = coordinate_projection(n, k);
        let direct = a.invert().unwrap().inverse;
        let fs = feshbach_invert(&a, &BlockSplit::new(p.clone()).unwrap()).unwrap();
        prop_assert!(fs.sub(&direct).hs_norm() / direct.hs_norm() < 1e-11);
        let jn = jn_invert(&a, &p).unwrap();
        prop_assert!(jn.sub(&direct).hs_norm() / direct.hs_norm() < 1e-11);
    }

    #[test]
    fn fourier_round_trip_and_parseval(values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256)) {
        let grid = Grid2D::new(16, 3.0).unwrap();
        let u = GridFunction::from_values(grid, values.iter().map(|&(a, b)| c64::new(a, b)).collect()).unwrap();
        let hat = fourier_forward(&u);
        let back = fourier_inverse(&hat);
        prop_assert!(back.sub(&u).norm_l2() < 1e-12 * u.norm_l2().max(1e-300));
        prop_assert!((hat.norm_l2() - u.norm_l2()).abs() < 1e-12 * u.norm_l2());
    }

    #[test]
    fn cutoffs_partition_unity(lam in 0.0f64..10.0, a in 0.05f64..3.0) {
        let total = chi_cutoff(lam, a, CutoffSide::LeQ) + chi_cutoff(lam, a, CutoffSide::Gt);
        prop_assert!((total - 1.0).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&chi_cutoff(lam, a, CutoffSide::LeQ)));
    }

    #[test]
    fn series_and_integral_agree_near_crossover(z in 0.5f64..2.0) {
        let (s, i) = (hankel_series(z, 0), hankel_integral(z, 0));
        prop_assert!((s - i).norm() / i.norm() < 1e-8);
    }

    #[test]
    fn interpolation_tracks_integral(z in 2.0f64..25.0) {
        let (a, b) = (hankel_interpolated(z), hankel_integral(z, 0));
        prop_assert!((a - b).norm() / b.norm() < 1e-10);
    }

    #[test]
    fn bessel_orders_satisfy_identities(z in 0.01f64..30.0) {
        let j = bessel_j_orders(z, 90);
        let neumann: f64 = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
        prop_assert!((neumann - 1.0).abs() < 1e-12);
        for m in 1..39 {
            let lhs = j[m - 1] + j[m + 1];
            let rhs = 2.0 * m as f64 / z * j[m];
            prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn loglog_slope_recovers_power(exponent in -3.0f64..5.0, c in 0.1f64..10.0) {
        let x = geometric_nodes((1e-3, 1e-1), 4);
        let y: Vec<f64> = x.iter().map(|t| c * t.powf(exponent)).collect();
        prop_assert!((loglog_slope(&x, &y) - exponent).abs() < 1e-9);
    }

    #[test]
    fn geometric_nodes_span_band(lo_exp in -4.0f64..-1.0, width in 0.5f64..3.0, per in 1usize..8) {
        let band = (10f64.powf(lo_exp), 10f64.powf(lo_exp + width));
        let x = geometric_nodes(band, per);
        prop_assert!((x[0] / band.0 - 1.0).abs() < 1e-12);
        prop_assert!((x[x.len() - 1] / band.1 - 1.0).abs() < 1e-12);
        prop_assert!(x.windows(2).all(|w| w[1] > w[0]));
    }
}
