//! Euler–Maclaurin tails of lattice sums for functions analytic near the
//! positive real axis. Odd derivatives come from Cauchy integrals on a circle.

use nalgebra::Complex;

use crate::error::Result;
use crate::quad::{self, Tolerance};

pub type C64 = Complex<f64>;

/// B_2, B_4, ..., B_20.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

const CAUCHY_POINTS: usize = 64;

/// All derivatives f^{(0..=n)}(z0) from the trapezoidal rule on |z − z0| = r.
pub fn cauchy_derivatives<F: Fn(C64) -> C64>(f: &F, z0: C64, r: f64, n: usize) -> Vec<C64> {
    let m = CAUCHY_POINTS.max(2 * n + 8);
    let samples: Vec<(C64, C64)> = (0..m)
        .map(|k| {
            let u = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            (u, f(z0 + u * r))
        })
        .collect();
    let mut out = Vec::with_capacity(n + 1);
    let mut fact = 1.0;
    for d in 0..=n {
        if d > 0 {
            fact *= d as f64;
        }
        let mut acc = C64::new(0.0, 0.0);
        for (u, v) in &samples {
            acc += v * u.powi(-(d as i32));
        }
        out.push(acc * (fact / (m as f64 * r.powi(d as i32))));
    }
    out
}

/// Σ_{k ≥ k0} f(k) by ∫_{k0}^∞ f + f(k0)/2 − Σ_j B_{2j}/(2j)! f^{(2j−1)}(k0).
///
/// f must decay at least like x^{-1-δ} and be analytic on the disc of
/// radius k0/2 around k0.
pub fn tail_sum<F: Fn(C64) -> C64>(f: &F, k0: f64) -> Result<C64> {
    let scale = f(C64::new(k0, 0.0)).norm() * k0;
    let tol = Tolerance::new(1e-17 * scale, 2e-14);
    let re = quad::integrate_to_infinity(|x| f(C64::new(x, 0.0)).re, k0, tol)?.value;
    let im = quad::integrate_to_infinity(|x| f(C64::new(x, 0.0)).im, k0, tol)?.value;
    let mut acc = C64::new(re, im) + f(C64::new(k0, 0.0)) * 0.5;
    let n = 2 * BERNOULLI.len() - 1;
    let d = cauchy_derivatives(f, C64::new(k0, 0.0), 0.5 * k0, n);
    let mut fact = 1.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let two_j = 2 * j + 2;
        fact *= ((two_j - 1) * two_j) as f64;
        acc -= d[two_j - 1] * (b / fact);
    }
    Ok(acc)
}

/// Σ_{k ≥ 1} f(k): explicit terms below `k0`, Euler–Maclaurin beyond.
pub fn positive_sum<F: Fn(C64) -> C64>(f: &F, k0: usize) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..k0 {
        acc += f(C64::new(k as f64, 0.0));
    }
    Ok(acc + tail_sum(f, k0 as f64)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basel_and_zeta_four() {
        let pi = std::f64::consts::PI;
        let s = positive_sum(&|z: C64| z.powi(-2), 16).unwrap();
        assert!((s.re - pi * pi / 6.0).abs() < 1e-14, "{s}");
        let s = positive_sum(&|z: C64| z.powi(-4), 16).unwrap();
        assert!((s.re - pi.powi(4) / 90.0).abs() < 1e-15, "{s}");
    }

    #[test]
    fn derivatives_of_exponential() {
        let d = cauchy_derivatives(&|z: C64| z.exp(), C64::new(1.0, 0.0), 0.5, 5);
        for v in d {
            assert!((v.re - std::f64::consts::E).abs() < 1e-12);
        }
    }
}
