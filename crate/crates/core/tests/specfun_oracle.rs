//! Kernel functions against values frozen from an independent arbitrary-precision evaluation (mpmath, 30 digits).

use thresh2d::c64;
use thresh2d::specfun::{
    bessel_j0, bessel_j_orders, g_threshold, hankel_h0, hankel_orders, hankel_with_derivative, resolvent_kernel, Branch,
};

// z, J0, Y0, J1, Y1
#[allow(clippy::excessive_precision)]
const REFERENCE: [(f64, f64, f64, f64, f64); 9] = [
    (
        0.05,
        0.999_375_097_649_468_6,
        -1.979_311_000_817_209_6,
        0.024_992_188_313_759_7,
        -12.789_855_171_174_97,
    ),
    (
        0.5,
        0.938_469_807_240_812_9,
        -0.444_518_733_506_706_56,
        0.242_268_457_674_873_9,
        -1.471_472_392_670_243,
    ),
    (
        1.0,
        0.765_197_686_557_966_6,
        0.088_256_964_215_676_96,
        0.440_050_585_744_933_5,
        -0.781_212_821_300_288_7,
    ),
    (
        2.0,
        0.223_890_779_141_235_67,
        0.510_375_672_649_745_1,
        0.576_724_807_756_873_4,
        -0.107_032_431_540_937_55,
    ),
    (
        3.7,
        -0.399_230_203_371_191_1,
        0.106_074_315_320_354_11,
        0.053_833_987_745_461_79,
        0.416_674_372_683_807_5,
    ),
    (
        10.0,
        -0.245_935_764_451_348_34,
        0.055_671_167_283_599_39,
        0.043_472_746_168_861_44,
        0.249_015_424_206_953_9,
    ),
    (
        24.5,
        0.023_697_433_734_067_9,
        -0.159_428_717_749_750_43,
        -0.158_978_411_819_328_08,
        -0.026_954_655_331_885_41,
    ),
    (
        25.5,
        0.144_062_157_546_847_86,
        -0.064_859_765_498_783_49,
        -0.062_048_536_491_484_1,
        -0.145_361_058_723_049_4,
    ),
    (
        60.0,
        -0.091_471_804_089_061_87,
        0.047_358_952_209_449_4,
        0.046_598_383_758_166_32,
        0.091_869_609_369_866_9,
    ),
];

fn quarter_i(j: f64, y: f64) -> c64 {
    c64::new(0.0, 0.25) * c64::new(j, y)
}

fn rel(a: c64, b: c64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn hankel_value_and_derivative_match_reference() {
    for &(z, j0, y0, j1, y1) in &REFERENCE {
        let value = hankel_h0(z, 0).unwrap();
        assert!(rel(value, quarter_i(j0, y0)) < 1e-11, "z={z}: {value}");
        // d/dz (i/4)H₀ = −(i/4)H₁
        let deriv = hankel_h0(z, 1).unwrap();
        assert!(rel(deriv, -quarter_i(j1, y1)) < 1e-10, "z={z}: {deriv}");
        let (v, d) = hankel_with_derivative(z);
        assert!(
            rel(v, quarter_i(j0, y0)) < 1e-10 && rel(d, -quarter_i(j1, y1)) < 1e-9,
            "z={z}"
        );
        assert!((bessel_j0(z) - j0).abs() < 1e-10, "z={z}");
    }
}

#[test]
fn integer_orders_follow_recurrences_from_reference() {
    for &(z, j0, y0, j1, y1) in &REFERENCE {
        let h = hankel_orders(z, 1);
        assert!(rel(h[1], quarter_i(j1, y1)) < 1e-9, "z={z}");
        let j = bessel_j_orders(z, 1);
        assert!((j[0] - j0).abs() < 1e-12 && (j[1] - j1).abs() < 1e-12, "z={z}");
        assert!(rel(h[0], quarter_i(j0, y0)) < 1e-10);
    }
}

#[test]
fn threshold_constant_matches_reference() {
    // −(1/2π)log(λ/2) − γ/2π, imaginary part 1/4
    for (lam, re) in [(1e-3, 1.117_854_472_096_313_4), (0.1, 0.384_918_873_216_885_67)] {
        let g = g_threshold(lam).unwrap();
        assert!((g.re - re).abs() < 1e-14 && g.im == 0.25, "λ={lam}: {g}");
    }
}

#[test]
fn incoming_kernel_is_conjugate_of_outgoing() {
    for r in [0.1, 1.0, 7.3] {
        let out = resolvent_kernel(0.8, r, Branch::Outgoing).unwrap();
        let inc = resolvent_kernel(0.8, r, Branch::Incoming).unwrap();
        assert_eq!(out.conj(), inc);
    }
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(hankel_h0(0.0, 0).is_err());
    assert!(hankel_h0(-1.0, 0).is_err());
    assert!(g_threshold(0.0).is_err());
    assert!(resolvent_kernel(1.0, 0.0, Branch::Outgoing).is_err());
}
