use std::f64::consts::PI;

use regtrace::spectral::{residue_density, SpectralModel};

/// ζ_R(s) for real s ≠ 1: Σ_{k<N} k^{-s} plus Euler–Maclaurin with exact
/// derivatives of x^{-s}.
fn riemann_zeta_oracle(s: f64) -> f64 {
    let n = 20.0f64;
    let mut acc: f64 = (1..20).map(|k| (k as f64).powf(-s)).sum();
    acc += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let b2j = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];
    let mut fact = 1.0;
    for (j, b) in b2j.iter().enumerate() {
        let m = 2 * j + 1; // derivative order 2j+1 of x^{-s}
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
        let mut rising = 1.0;
        for i in 0..m {
            rising *= -s - i as f64;
        }
        acc -= b / fact * rising * n.powf(-s - m as f64);
    }
    acc
}

#[test]
fn oracle_reproduces_known_values() {
    assert!((riemann_zeta_oracle(2.0) - PI * PI / 6.0).abs() < 1e-14);
    assert!((riemann_zeta_oracle(0.5) + 1.4603545088095868).abs() < 1e-13);
}

#[test]
fn circle_zeta_continuation() {
    let m = SpectralModel::circle(1.0).unwrap();
    let z = m.zeta(0.25).unwrap();
    let oracle = 2.0 * riemann_zeta_oracle(0.5);
    assert!((z - oracle).abs() < 1e-10, "{z} vs {oracle}");
    assert!((z + 2.9207090).abs() < 1e-7);
    assert!((m.kv_trace(0.25).unwrap() - oracle).abs() < 1e-10);
    // ζ(0) = −dim ker for the projected Laplacian on a circle
    assert!((m.zeta(0.0).unwrap() + 1.0).abs() < 1e-12);
    assert!((m.zeta(-1.0).unwrap() - 2.0 * riemann_zeta_oracle(-2.0)).abs() < 1e-10);
}

#[test]
fn mellin_and_direct_sums_agree() {
    for model in [
        SpectralModel::circle(1.0).unwrap(),
        SpectralModel::unit_torus(2),
        SpectralModel::torus(vec![1.0, 2.5]).unwrap(),
    ] {
        for s in [2.0, 3.0, 4.0] {
            let a = model.zeta(s).unwrap();
            let b = model.zeta_direct(s).unwrap();
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{model:?} s={s}: {a} vs {b}");
        }
    }
}

#[test]
fn heat_trace_small_time_limits() {
    let c = SpectralModel::circle(1.0).unwrap();
    let t = 1e-4f64;
    assert!((t.sqrt() * c.heat_trace(t) - PI.sqrt()).abs() < 1e-12);
    let tor = SpectralModel::unit_torus(2);
    assert!((t * tor.heat_trace(t) - 1.0 / (4.0 * PI)).abs() < 1e-12);
    let mut prev = f64::INFINITY;
    for i in 0..30 {
        let t = 10f64.powf(-3.0 + 0.1 * i as f64);
        let v = tor.heat_trace(t);
        assert!(v > 0.0 && v < prev);
        prev = v;
    }
}

#[test]
fn heat_coefficients_of_flat_models() {
    let c = SpectralModel::circle(1.0).unwrap().heat_coefficients(6).unwrap();
    assert!((c.coefficients[0] - PI.sqrt()).abs() < 1e-15);
    assert!((c.leading_exponent + 0.5).abs() < 1e-10);
    let c2 = SpectralModel::circle(2.0).unwrap().heat_coefficients(4).unwrap();
    assert!((c2.coefficients[0] - 2.0 * PI.sqrt()).abs() < 1e-14);
    let t = SpectralModel::unit_torus(2).heat_coefficients(2).unwrap();
    assert!((t.coefficients[0] - 1.0 / (4.0 * PI)).abs() < 1e-16);
    assert_eq!(t.coefficients[2], 0.0);
    assert!(t.fitted[2].abs() < 1e-6);
}

#[test]
fn residue_of_powers_two_routes() {
    let c = SpectralModel::circle(1.0).unwrap();
    let r = c.residue_trace_power(-0.5).unwrap();
    assert!((r.heat - 2.0).abs() < 1e-12);
    assert!((r.zeta - 2.0).abs() < 1e-8, "{r:?}");
    let r = c.residue_trace_power(-0.25).unwrap();
    assert_eq!(r.heat, 0.0);
    assert!(r.zeta.abs() < 1e-8, "{r:?}");
    let t = SpectralModel::unit_torus(2);
    let r = t.residue_trace_power(-1.0).unwrap();
    assert!((r.heat - 1.0 / (2.0 * PI)).abs() < 1e-12);
    assert!((r.zeta - 1.0 / (2.0 * PI)).abs() < 1e-8, "{r:?}");
}

#[test]
fn volume_law_for_residue() {
    for model in [
        SpectralModel::circle(0.5).unwrap(),
        SpectralModel::circle(3.0).unwrap(),
        SpectralModel::torus(vec![1.0, 2.0]).unwrap(),
        SpectralModel::torus(vec![0.7, 0.7]).unwrap(),
    ] {
        let n = model.dim();
        let r = model.residue_trace_power(-(n as f64) / 2.0).unwrap();
        let expect = residue_density(n) * model.volume();
        assert!((r.heat - expect).abs() < 1e-12 * expect);
        assert!((r.zeta - expect).abs() < 1e-8 * expect, "{model:?}: {r:?} vs {expect}");
    }
}

#[test]
fn weyl_law() {
    for model in [SpectralModel::circle(1.0).unwrap(), SpectralModel::unit_torus(2)] {
        let n = model.dim() as f64;
        let lambda = 1e6f64;
        let ratio = model.counting(lambda) as f64 / lambda.powf(n / 2.0);
        assert!((ratio / model.weyl_constant() - 1.0).abs() < 0.01, "{model:?}: {ratio}");
    }
}
