//! Gauss rules used by the special functions and the λ-quadratures.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * wt;
        w[n - 1 - i] = half * wt;
    }
    (x, w)
}

/// Gauss–Laguerre rule for the weight e^{-t} t^{-1/2} on (0, ∞).
pub fn gauss_laguerre_inv_sqrt(n: usize) -> (Vec<f64>, Vec<f64>) {
    let alpha = -0.5_f64;
    let nf = n as f64;
    // Γ(n+α)/Γ(n) with Γ(1/2) = √π
    let mut gamma_ratio = PI.sqrt();
    for k in 1..n {
        gamma_ratio *= (k as f64 + alpha) / k as f64;
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n {
        if i == 0 {
            z = (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * nf + 1.8 * alpha);
        } else if i == 1 {
            z += (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai)) * (z - x[i - 2])
                / (1.0 + 0.3 * alpha);
        }
        let (mut p2, mut pp) = (0.0, 1.0);
        for _ in 0..200 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 + alpha - z) * p2 - (jf - 1.0 + alpha) * p3) / jf;
            }
            pp = (nf * p1 - (nf + alpha) * p2) / z;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        x[i] = z;
        w[i] = -gamma_ratio / (pp * nf * p2);
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7, -1.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        let exact = (2f64.powi(13) + 1.0) / 13.0;
        assert!((s - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn laguerre_moments_match_gamma() {
        let (t, w) = gauss_laguerre_inv_sqrt(64);
        // ∫ e^{-t} t^{k-1/2} dt = Γ(k + 1/2)
        let mut gamma = PI.sqrt();
        for k in 0..20 {
            let s: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(k)).sum();
            assert!((s - gamma).abs() < 1e-11 * gamma, "k={k}: {s} vs {gamma}");
            gamma *= k as f64 + 0.5;
        }
    }

    #[test]
    fn laguerre_nodes_frozen() {
        // scipy.special.roots_genlaguerre(64, -0.5)
        let (t, w) = gauss_laguerre_inv_sqrt(64);
        assert!((t[0] - 0.00960083).abs() < 1e-8);
        assert!((w[0] - 0.38819522).abs() < 1e-8);
        assert!((t[63] - 233.83975178282574).abs() < 1e-9);
    }
}
