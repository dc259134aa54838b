use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regtrace::cone::*;
use regtrace::poly::Poly;
use regtrace::regint::stokes_defect;
use regtrace::symbol::SymbolExpansion;
use regtrace::Error;

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

fn samples(n: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50).map(|_| (rng.random_range(0.1..6.0), random_point(&mut rng, n))).collect()
}

#[test]
fn space_types() {
    assert_eq!(check_type(&ProfileSpace::ClassicalOrder(0.5)).unwrap(), SpaceType::I);
    assert_eq!(check_type(&ProfileSpace::ClassicalOrder(0.0)).unwrap(), SpaceType::II);
    assert_eq!(check_type(&ProfileSpace::ClassicalOrder(3.0)).unwrap(), SpaceType::II);
    assert_eq!(check_type(&ProfileSpace::Schwartz).unwrap(), SpaceType::I);
    for a in [-1.0, -2.0] {
        assert!(matches!(ProfileSpace::classical(a), Err(Error::InadmissibleProfile(_))));
    }
    // the functional on compact support: λ = 1 for type I, 0 for type II
    let window = Profile::window(1.0, 1.0, 3.0).unwrap();
    assert_eq!(ProfileSpace::ClassicalOrder(0.5).integral(&window).unwrap(), 2.0);
    assert_eq!(ProfileSpace::ClassicalOrder(0.0).integral(&window).unwrap(), 0.0);
    assert_eq!(ProfileSpace::Schwartz.integral(&window).unwrap(), 2.0);
}

#[test]
fn fiber_integration_examples() {
    let one = SphereForm::one(2);
    let type1 = ProfileSpace::ClassicalOrder(-0.5);
    let w = ConeForm::generator(&Profile::tail(1.0, -2.0, 1.0).unwrap(), &one, true).unwrap();
    assert_eq!(fiber_integrate(&w, &type1).unwrap(), one);
    let w = ConeForm::generator(&Profile::tail(1.0, -2.0, 1.0).unwrap(), &SphereForm::dtheta(), false).unwrap();
    assert!(fiber_integrate(&w, &type1).unwrap().is_zero());
    let w = ConeForm::generator(&Profile::tail(1.0, -1.0, 1.0).unwrap(), &one, true).unwrap();
    assert_eq!(fiber_integrate(&w, &ProfileSpace::ClassicalOrder(0.0)).unwrap(), one);
}

#[test]
fn homotopy_examples() {
    let type1 = ProfileSpace::ClassicalOrder(-0.5);
    let phi = Profile::tail(1.0, -2.0, 1.0).unwrap();
    let eta = SphereForm::dtheta();
    let s = thom_section(&eta, &phi, &type1).unwrap();
    assert_eq!(fiber_integrate(&s, &type1).unwrap(), eta);
    assert!(homotopy_k(&s, &phi, &type1).unwrap().is_zero());
    // ∮ of χ(r^{-2} + r^{-3}) is 3/2 under the partie finie, so the integrand
    // is χ(s^{-3} − s^{-2}/2) and K at r = 2 is 3/8 − 1/4
    let f = Profile::from_terms(vec![
        (Shape::Tail { e: -2.0, l: 0, r0: 1.0 }, 1.0),
        (Shape::Tail { e: -3.0, l: 0, r0: 1.0 }, 1.0),
    ])
    .unwrap();
    let w = ConeForm::generator(&f, &SphereForm::one(2), true).unwrap();
    let k = homotopy_k(&w, &phi, &type1).unwrap();
    let (a, b) = k.at_radius(2.0);
    assert!(b.is_zero());
    assert!((a.frame_values(&[1.0, 0.0])[0] - 0.125).abs() < 1e-15);
    let bad = Profile::tail(2.0, -2.0, 1.0).unwrap();
    assert!(thom_section(&eta, &bad, &type1).is_err());
}

#[test]
fn exterior_derivative_squares_to_zero() {
    for c in corpus() {
        let dd = c.form.d().unwrap().d().unwrap();
        assert!(dd.is_zero(), "{}: {dd:?}", c.name);
    }
}

#[test]
fn total_degree_preserved() {
    for c in corpus() {
        let before = c.form.total_degrees();
        let after = c.form.d().unwrap().total_degrees();
        for t in &after {
            assert!(before.iter().any(|b| (b - t).abs() < 1e-12), "{}: {t} not in {before:?}", c.name);
        }
    }
}

#[test]
fn fiber_integration_commutes_with_d() {
    for c in corpus() {
        let lhs = fiber_integrate(&c.form.d().unwrap(), &c.space).unwrap();
        let rhs = fiber_integrate(&c.form, &c.space).unwrap().d();
        assert!(lhs.max_coefficient_difference(&rhs) < 1e-10, "{}", c.name);
    }
}

#[test]
fn section_is_right_inverse() {
    for c in corpus() {
        let n = c.form.ambient_dim();
        let etas = [SphereForm::one(n), SphereForm::monomial(n, vec![1; n], 0b1, 2.0).unwrap()];
        for eta in etas {
            let s = thom_section(&eta, &c.phi, &c.space).unwrap();
            assert_eq!(fiber_integrate(&s, &c.space).unwrap(), eta, "{}", c.name);
        }
    }
}

#[test]
fn homotopy_identity_on_corpus() {
    for (i, c) in corpus().iter().enumerate() {
        let pts = samples(c.form.ambient_dim(), 1000 + i as u64);
        let defect = homotopy_defect(&c.form, &c.phi, &c.space, &pts).unwrap();
        assert!(defect < 1e-8, "{}: {defect}", c.name);
    }
}

#[test]
fn res_on_forms() {
    let top = SymbolForm::new(2, vec![(0b11, SymbolExpansion::cutoff(-2.0, 0, Poly::constant(2, 1.0)))]).unwrap();
    assert!((res_form(&top).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
    let poly =
        SymbolForm::new(2, vec![(0b11, SymbolExpansion::polynomial(Poly::monomial(2, vec![1, 1], 1.0)))]).unwrap();
    assert_eq!(res_form(&poly).unwrap(), 0.0);
    let lower = SymbolForm::new(2, vec![(0b01, SymbolExpansion::cutoff(-2.0, 0, Poly::constant(2, 1.0)))]).unwrap();
    assert_eq!(res_form(&lower).unwrap(), 0.0);
}

#[test]
fn stokes_property_on_classical_corpus() {
    for (name, s) in symbol_form_corpus() {
        let v = stokes_property_check(&s).unwrap();
        assert!(v.abs() < 1e-15, "{name}: {v}");
    }
}

#[test]
fn log_coefficient_breaks_stokes_property() {
    // σ = χ ξ₁|ξ|^{-2} log|ξ| dξ₂: (dσ)_{-2,0} = ω₁², so res(dσ) = π/(2π)²
    let g = SymbolExpansion::cutoff(-1.0, 1, Poly::var(2, 0));
    let s = SymbolForm::new(2, vec![(0b10, g)]).unwrap();
    let v = stokes_property_check(&s).unwrap();
    assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15, "{v}");
    // the same number is the boundary defect of the log coefficient
    let stripped = SymbolExpansion::cutoff(-1.0, 0, Poly::var(2, 0));
    let defect = stokes_defect(&stripped, 0).unwrap();
    assert!((v * 4.0 * PI * PI - defect).abs() < 1e-13);
}
