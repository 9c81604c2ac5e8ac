use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thresh2d::c64;
use thresh2d::dense::DenseOperator;
use thresh2d::grid::{BandWindow, Grid2D};
use thresh2d::inversion::{feshbach_invert, BlockSplit};
use thresh2d::ops::{build_m_on, v_hat, G0Convolver};
use thresh2d::potential::{factor_potential, Potential, Profile};
use thresh2d::specfun::{hankel_asymptotic, hankel_integral, hankel_interpolated, hankel_series, Branch};
use thresh2d::waveop::band_limited_packet;

fn hankel(c: &mut Criterion) {
    let mut g = c.benchmark_group("hankel");
    g.bench_function("series_z1", |b| b.iter(|| hankel_series(black_box(1.0), 0)));
    g.bench_function("integral_z10", |b| b.iter(|| hankel_integral(black_box(10.0), 0)));
    g.bench_function("interpolated_z10", |b| b.iter(|| hankel_interpolated(black_box(10.0))));
    g.bench_function("asymptotic_z40", |b| b.iter(|| hankel_asymptotic(black_box(40.0), 0)));
    g.finish();
}

fn birman_schwinger(c: &mut Criterion) {
    let mut g = c.benchmark_group("birman_schwinger");
    g.sample_size(10);
    for n in [64usize, 128] {
        let pot = Potential::from_profile(Grid2D::new(n, 10.0).unwrap(), &Profile::gaussian(0.8), 5.0).unwrap();
        let active = factor_potential(&pot).active().unwrap();
        g.bench_with_input(BenchmarkId::new("build_m", n), &active, |b, a| {
            b.iter(|| build_m_on(black_box(0.3), a).unwrap())
        });
        let m = build_m_on(0.3, &active).unwrap();
        let vh = v_hat(&active);
        let p = DenseOperator::outer(&vh, &vh.iter().map(|x| x.conj()).collect::<Vec<c64>>(), 1.0);
        let split = BlockSplit::new(p).unwrap();
        g.bench_with_input(BenchmarkId::new("feshbach", n), &m, |b, m| {
            b.iter(|| feshbach_invert(m, &split).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("lu_solve", n), &m, |b, m| {
            let rhs = vec![c64::new(1.0, 0.0); m.nrows()];
            b.iter(|| m.solve_checked(&rhs, "M").unwrap())
        });
    }
    g.finish();
}

fn convolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("g0_convolution");
    g.sample_size(10);
    for n in [128usize, 256] {
        let grid = Grid2D::new(n, 20.0).unwrap();
        let win = BandWindow::new(0.5, 2.0, &grid).unwrap();
        let f = band_limited_packet(grid, &win, 1.0, false);
        let conv = G0Convolver::new(0.7, Branch::Outgoing, grid).unwrap();
        g.bench_with_input(BenchmarkId::new("full_grid", n), &f, |b, f| b.iter(|| conv.apply(f)));
    }
    g.finish();
}

criterion_group!(benches, hankel, birman_schwinger, convolution);
criterion_main!(benches);
