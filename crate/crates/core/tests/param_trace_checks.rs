use std::f64::consts::PI;
use std::sync::Arc;

use regtrace::em::C64;
use regtrace::param_trace::*;
use regtrace::Error;

fn inverse_square() -> ParamMultiplier {
    ParamMultiplier::bracket(-1.0, 1.0).unwrap()
}

/// Σ_k ∂_μ³ √(k² + μ² + 1) by direct summation to |k| ≤ n and closed-form
/// integral tails from n + 1/2.
fn third_derivative_oracle(mu: f64) -> f64 {
    let b = mu * mu + 1.0;
    let term = |k: f64| {
        let q = k * k + b;
        -3.0 * mu * q.powf(-1.5) + 3.0 * mu.powi(3) * q.powf(-2.5)
    };
    let n = 1000;
    let mut acc = term(0.0);
    for k in 1..=n {
        acc += 2.0 * term(k as f64);
    }
    let x: f64 = n as f64 + 0.5;
    let root = (x * x + b).sqrt();
    let tail32 = 1.0 / (root * (root + x));
    let tail52 = 2.0 / (3.0 * b * b) - x * (2.0 * x * x + 3.0 * b) / (3.0 * b * b * root.powi(3));
    acc + 2.0 * (-3.0 * mu * tail32 + 3.0 * mu.powi(3) * tail52)
}

#[test]
fn inverse_square_trace_values() {
    let tf = trace_function(&inverse_square()).unwrap();
    assert!((tf.value(0.0).unwrap() - 3.1533481).abs() < 1e-7);
    assert!((tf.value(0.0).unwrap() - PI / PI.tanh()).abs() < 1e-10);
    let c = 2f64.sqrt();
    assert!((tf.value(1.0).unwrap() - PI / (c * (PI * c).tanh())).abs() < 1e-10);
    assert!((tf.value(1.0).unwrap() - 2.2220562).abs() < 1e-7);
}

#[test]
fn sqrt_symbol_third_derivative() {
    let a = ParamMultiplier::bracket(0.5, 1.0).unwrap();
    let tf = trace_function(&a).unwrap();
    assert_eq!(tf.alpha(), 3);
    assert_eq!(tf.ambiguity_degree(), 3);
    for mu in [0.0, 1.0, 5.0] {
        let got = tf.derivative(mu, 3).unwrap();
        let want = third_derivative_oracle(mu);
        assert!((got - want).abs() < 1e-10, "mu {mu}: {got} vs {want}");
    }
    // lower derivatives integrate back from 0 with zero constants
    assert_eq!(tf.value(0.0).unwrap(), 0.0);
    let h = 1e-3;
    let d2 = tf.derivative(1.0, 2).unwrap();
    let fd = (tf.derivative(1.0 + h, 1).unwrap() - tf.derivative(1.0 - h, 1).unwrap()) / (2.0 * h);
    assert!((d2 - fd).abs() < 1e-6, "{d2} vs {fd}");
}

#[test]
fn expansion_of_inverse_square() {
    let e = trace_expansion(&inverse_square()).unwrap();
    assert!((e.get(-1.0, 0) - PI).abs() < 1e-14);
    assert!((e.get(-3.0, 0) + PI / 2.0).abs() < 1e-14);
    // π/√(μ²+1) differs from the trace by e^{-2πμ}-small terms
    let tf = trace_function(&inverse_square()).unwrap();
    for mu in [6.0, 9.0] {
        let v = tf.value(mu).unwrap();
        assert!((v - PI / (mu * mu + 1.0).sqrt()).abs() < 1e-12 * v.max(1.0));
        assert!((v - e.eval(mu)).abs() < 1e-10, "{v} vs {}", e.eval(mu));
    }
    assert!(trace_expansion(&ParamMultiplier::zero()).unwrap().is_empty());
}

#[test]
fn fitted_expansion_matches_analytic() {
    for (name, a) in shipped_family() {
        let analytic = trace_expansion(&a).unwrap();
        let fit = fitted_trace_expansion(&a).unwrap();
        let lead = analytic.entries().into_iter().max_by(|x, y| x.0.total_cmp(&y.0)).unwrap();
        let got = fit.get(lead.0, lead.1).unwrap();
        assert!((got - lead.2).abs() < 1e-6 * lead.2.abs().max(1.0), "{name}: {got} vs {lead:?}");
    }
}

#[test]
fn log_power_at_most_one() {
    for (name, a) in shipped_family() {
        assert!(trace_expansion(&a).unwrap().max_logpow() <= 1, "{name}");
        let higher = a.mul_mu().unwrap().mul_mu().unwrap();
        assert!(trace_expansion(&higher).unwrap().max_logpow() <= 1, "{name}");
    }
    let sqrt = ParamMultiplier::bracket(0.5, 1.0).unwrap();
    assert_eq!(trace_expansion(&sqrt).unwrap().max_logpow(), 1);
}

#[test]
fn regularized_trace_two_routes() {
    let a = inverse_square();
    let lattice = tr_bar(&a).unwrap();
    let closed = tr_bar_closed_form(&a).unwrap().unwrap();
    assert!((lattice - closed).abs() < 1e-8, "{lattice} vs {closed}");
    // frozen from an independent 30-digit quadrature of the closed form
    assert!((closed - REGRESSION_TR_BAR).abs() < 1e-8, "{closed}");
}

const REGRESSION_TR_BAR: f64 = 4.366705689016766;

#[test]
fn regularized_trace_trivial_cases() {
    assert_eq!(tr_bar(&ParamMultiplier::zero()).unwrap(), 0.0);
    let odd = inverse_square().mul_mu().unwrap();
    assert!(tr_bar(&odd).unwrap().abs() < 1e-9);
    let poly = ParamMultiplier::mu_monomial(2, 1.0);
    assert_eq!(tr_bar(&poly).unwrap(), 0.0);
    assert_eq!(derived_trace(&poly).unwrap(), 0.0);
    assert_eq!(res_of_tr(&poly).unwrap(), 0.0);
}

#[test]
fn residue_and_derived_traces() {
    let a = inverse_square();
    assert!((res_of_tr(&a).unwrap() - 1.0).abs() < 1e-14);
    let d = derived_trace(&a).unwrap();
    let s = derived_trace_from_expansion(&a).unwrap();
    assert!((d - s).abs() < 1e-8, "{d} vs {s}");
    // μ/(ξ²+μ²+1): the trace tends to ±π, so the boundary term is 2π
    let m = a.mul_mu().unwrap();
    let d = derived_trace(&m).unwrap();
    let s = derived_trace_from_expansion(&m).unwrap();
    assert!((s - 2.0 * PI).abs() < 1e-12, "{s}");
    assert!((d - s).abs() < 1e-8, "{d} vs {s}");
}

#[test]
fn commutation_with_derivative_and_parameter() {
    let points: Vec<f64> = (0..20).map(|i| -4.75 + 0.5 * i as f64).collect();
    for (name, a) in shipped_family() {
        let c = commutation_defects(&a, &points).unwrap();
        assert!(c.derivative < 1e-9, "{name}: {c:?}");
        assert!(c.multiplication < 1e-9, "{name}: {c:?}");
    }
}

#[test]
fn representative_changes_by_polynomial() {
    for (name, a) in shipped_family() {
        for mu0 in [-2.0, 0.5, 3.0] {
            let d = representative_defect(&a, mu0).unwrap();
            assert!(d.abs() < 1e-10, "{name} at {mu0}: {d}");
        }
    }
}

#[test]
fn commuting_products_are_tracial() {
    let a = ParamMultiplier::bracket(0.5, 1.0).unwrap();
    let b = inverse_square().mul_mu().unwrap();
    let ab = a.multiply(&b).unwrap();
    let ba = b.multiply(&a).unwrap();
    for mu in [0.0, 0.7, 3.0] {
        assert_eq!(trace_function(&ab).unwrap().value(mu).unwrap(), trace_function(&ba).unwrap().value(mu).unwrap());
    }
}

#[test]
fn closure_multiplier_matches_brackets() {
    // a = (ξ²+μ²+1)^{-1} with its first μ-derivative
    let a0: Arc<dyn Fn(C64, f64) -> C64 + Send + Sync> = Arc::new(|z: C64, mu: f64| (z * z + mu * mu + 1.0).inv());
    let a1: Arc<dyn Fn(C64, f64) -> C64 + Send + Sync> =
        Arc::new(|z: C64, mu: f64| (z * z + mu * mu + 1.0).powi(-2) * (-2.0 * mu));
    let custom = ParamMultiplier::custom(-2.0, vec![a0.clone(), a1]);
    let tf = trace_function(&custom).unwrap();
    let reference = trace_function(&inverse_square()).unwrap();
    for mu in [0.0, 1.3] {
        assert!((tf.value(mu).unwrap() - reference.value(mu).unwrap()).abs() < 1e-12);
    }
    let d = TraceFunction::with_alpha(&custom, 1).unwrap();
    assert!((d.derivative(0.8, 1).unwrap() - reference.derivative(0.8, 1).unwrap()).abs() < 1e-12);
    let short = ParamMultiplier::custom(-2.0, vec![a0]);
    assert!(matches!(TraceFunction::with_alpha(&short, 1), Err(Error::MissingDerivative)));
}
