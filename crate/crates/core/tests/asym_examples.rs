use std::f64::consts::PI;

use regtrace::asym::{bq_expansion, fit_expansion, numeric_f, sample_f, BracketKernel};
use regtrace::poly::Poly;
use regtrace::symbol::SymbolExpansion;

fn inverse_square() -> SymbolExpansion {
    SymbolExpansion::cutoff(-2.0, 0, Poly::constant(1, 1.0))
}

fn log_line() -> SymbolExpansion {
    SymbolExpansion::cutoff(0.0, 1, Poly::constant(1, 1.0))
}

const Q: BracketKernel = BracketKernel { dim: 1, s: 1.0 };

#[test]
fn inverse_square_coefficients() {
    let e = bq_expansion(&inverse_square(), &Q, None).unwrap();
    assert!((e.get(-2.0, 0) - 2.0).abs() < 1e-10, "{:?}", e.entries());
    assert!((e.get(-3.0, 0) + PI).abs() < 1e-10, "{:?}", e.entries());
    assert!((e.get(-4.0, 0) - 2.0).abs() < 1e-10, "{:?}", e.entries());
    assert!(e.get(-2.0, 1).abs() < 1e-12);
}

#[test]
fn inverse_square_closed_form_at_ten() {
    let l = 10.0f64;
    let exact = 2.0 / (l * l) * (1.0 - PI / (2.0 * l) + (1.0 / l).atan() / l);
    let v = numeric_f(&inverse_square(), &Q, l).unwrap();
    assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    assert!((v - 0.017_057_74).abs() < 1e-8);
}

#[test]
fn log_example_coefficients() {
    let e = bq_expansion(&log_line(), &Q, None).unwrap();
    assert!((e.get(-1.0, 1) - PI).abs() < 1e-10, "{:?}", e.entries());
    assert!(e.get(-1.0, 0).abs() < 1e-10, "{:?}", e.entries());
    assert!((e.get(-2.0, 0) - 2.0).abs() < 1e-10, "{:?}", e.entries());
}

#[test]
fn log_example_fit() {
    let samples = sample_f(&log_line(), &Q, 1e2, 1e4, 24).unwrap();
    let basis = [(-1.0, 1), (-1.0, 0), (-2.0, 0), (-3.0, 0), (-4.0, 0)];
    let f = fit_expansion(&samples, &basis).unwrap();
    assert!((f.get(-1.0, 1).unwrap() - PI).abs() < 1e-4 * PI, "{f:?}");
}
