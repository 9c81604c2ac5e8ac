//! Stationary wave operator against independent routes: free dynamics, the full-grid
//! convolution, quadrature refinement and unitarity of the propagated flow.

use thresh2d::grid::{BandWindow, Grid2D, GridFunction};
use thresh2d::potential::{Potential, Profile};
use thresh2d::waveop::{
    band_limited_packet, evolve, w_stationary, w_stationary_member, w_time_dependent, DilationFamily, InverseMode,
    QuadratureScheme,
};

fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    a.sub(b).norm_l2() / b.norm_l2()
}

#[test]
fn free_dynamics_is_identity_on_both_routes() {
    let grid = Grid2D::new(64, 10.0).unwrap();
    let win = BandWindow::new(0.5, 2.0, &grid).unwrap();
    let u = band_limited_packet(grid, &win, 1.0, true);
    let q = QuadratureScheme::for_window(&win, 0.5, &grid).unwrap();
    let stat = w_stationary(&Potential::zero(grid), &u, &q, InverseMode::DirectSolve).unwrap();
    assert!((stat.w_u.norm_l2() / u.norm_l2() - 1.0).abs() < 1e-8);
    let td = w_time_dependent(&Potential::zero(grid), &u, &[1.0], None, 4).unwrap();
    assert!(rel(&td.outputs[0], &u) < 1e-8);
}

#[test]
fn quadrature_refinement_changes_little() {
    let grid = Grid2D::new(64, 10.0).unwrap();
    let pot = Potential::from_profile(grid, &Profile::gaussian(0.8), 5.0).unwrap();
    let win = BandWindow::new(0.5, 2.0, &grid).unwrap();
    let u = band_limited_packet(grid, &win, 1.0, false);
    let q = QuadratureScheme::for_window(&win, 0.5, &grid).unwrap();
    let coarse = w_stationary(&pot, &u, &q, InverseMode::DirectSolve).unwrap();
    let fine = w_stationary(&pot, &u, &q.refined(), InverseMode::DirectSolve).unwrap();
    let d = rel(&coarse.w_u, &fine.w_u);
    assert!(d < 1e-2, "refinement moved W₊u by {d:.3e}");
}

#[test]
fn split_step_propagator_is_unitary_and_reversible() {
    let grid = Grid2D::new(64, 12.0).unwrap();
    let pot = Potential::from_profile(grid, &Profile::gaussian(0.8), 5.0).unwrap();
    let win = BandWindow::new(0.5, 2.0, &grid).unwrap();
    let u = band_limited_packet(grid, &win, 1.0, false);
    let forward = evolve(&pot.values, &u, 1.5, 0.01);
    assert!((forward.norm_l2() / u.norm_l2() - 1.0).abs() < 1e-12);
    assert!(rel(&evolve(&pot.values, &forward, -1.5, 0.01), &u) < 1e-12);
}

#[test]
fn propagated_wave_operator_keeps_norm_inside_box() {
    let grid = Grid2D::new(64, 12.0).unwrap();
    let pot = Potential::from_profile(grid, &Profile::gaussian(0.8), 5.0).unwrap();
    let win = BandWindow::new(0.5, 2.0, &grid).unwrap();
    let u = band_limited_packet(grid, &win, 1.0, false);
    let td = w_time_dependent(&pot, &u, &[1.0, 2.0], None, 4).unwrap();
    for out in &td.outputs {
        let r = out.norm_l2() / u.norm_l2();
        assert!((r - 1.0).abs() < 1e-3, "ratio {r}");
    }
}

#[test]
fn dilation_member_matches_full_grid() {
    let grid = Grid2D::new(128, 20.0).unwrap();
    let pot = Potential::from_profile(grid, &Profile::gaussian(0.8), 5.0).unwrap();
    let win = BandWindow::new(1.0, 4.0, &grid).unwrap();
    let family = DilationFamily::new(band_limited_packet(grid, &win, 1.0, true), win, vec![1.0]).unwrap();
    let q = QuadratureScheme::new(0.5, family.support(0), 64, grid.half_width * 2f64.sqrt()).unwrap();
    let member = w_stationary_member(&pot, &family, 0, &q).unwrap();
    assert_eq!(member.u.fine.grid, grid);
    let full = w_stationary(&pot, &member.u.fine, &q, InverseMode::DirectSolve).unwrap();
    let d = rel(&member.w_u.fine, &full.w_u);
    assert!(d < 1e-8, "member vs full grid {d:.3e}");
}
