//! Partie finie (cut-off) and residue integrals of symbols on R^p.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::asym::log_power_primitive;
use crate::error::{Error, Result};
use crate::expansion::AsymptoticExpansion;
use crate::poly::Poly;
use crate::quad::{self, Tolerance};
use crate::symbol::{norm, AngularFunction, SymbolExpansion};

/// Tolerance used for ball and remainder quadratures.
pub const TOL: Tolerance = Tolerance::new(1e-12, 1e-13);
const ANGULAR_TOL: f64 = 1e-13;

fn same_order(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// ∫_{|x| ≤ rho} f(x) dx, radial quadrature per direction with breakpoints.
pub fn ball_integral<F, B>(f: &F, breaks: &B, p: usize, rho: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    B: Fn(&[f64]) -> Vec<f64>,
{
    let radial = |w: &[f64]| -> Result<f64> {
        let mut pts = vec![0.0];
        let mut b: Vec<f64> = breaks(w).into_iter().filter(|r| *r > 0.0 && *r < rho).collect();
        b.sort_by(f64::total_cmp);
        pts.extend(b);
        pts.push(rho);
        let g = |r: f64| {
            let x: Vec<f64> = w.iter().map(|v| r * v).collect();
            f(&x) * r.powi(p as i32 - 1)
        };
        Ok(quad::integrate_pieces(&g, &pts, TOL)?.value)
    };
    quad::sphere_integrate(&radial, p, ANGULAR_TOL)
}

/// ∫_{|x| ≥ rho} f(x) dx for integrable f.
pub fn exterior_integral<F: Fn(&[f64]) -> f64>(f: &F, p: usize, rho: f64) -> Result<f64> {
    let radial = |w: &[f64]| -> Result<f64> {
        let g = |r: f64| {
            let x: Vec<f64> = w.iter().map(|v| r * v).collect();
            f(&x) * r.powi(p as i32 - 1)
        };
        Ok(quad::integrate_to_infinity(g, rho, TOL)?.value)
    };
    quad::sphere_integrate(&radial, p, ANGULAR_TOL)
}

/// Large-R expansion of ∫_{|x| ≤ R} f(x) dx.
pub fn ball_integral_expansion(sym: &SymbolExpansion) -> Result<AsymptoticExpansion> {
    let p = sym.dim();
    let pf = p as f64;
    if !sym.remainder_is_zero() && sym.remainder_order() + pf >= 0.0 {
        return Err(Error::InsufficientDepth { remainder_order: sym.remainder_order(), dim: p });
    }
    let rem = if sym.remainder_is_zero() { f64::NEG_INFINITY } else { sym.remainder_order() + pf };
    let mut out = AsymptoticExpansion::new("R", rem);
    let rho = sym.radius();
    for t in sym.terms() {
        let s = t.angular.sphere_integral()?;
        if s == 0.0 {
            continue;
        }
        let alpha = t.order + pf - 1.0;
        let l = t.logpow;
        let expansion = crate::asym::log_power_expansion(alpha, l);
        out.add_expansion(&expansion.scaled(s), 1.0);
        // terms only live on r ≥ rho; remove ∫_1^rho
        if rho != 1.0 {
            out.add(0.0, 0, -s * log_power_primitive(alpha, l, rho));
        }
    }
    let mut constant = 0.0;
    if !sym.core_is_zero() {
        let core = sym.core();
        constant += ball_integral(&|x: &[f64]| core.eval(x), &|w: &[f64]| sym.core_breaks(w), p, rho)?;
    }
    if !sym.remainder_is_zero() {
        let r = sym.remainder();
        constant += exterior_integral(&|x: &[f64]| r.eval(x), p, rho)?;
    }
    for layer in sym.layers() {
        constant += layer.radius.powi(p as i32 - 1) * layer.weight.sphere_integral()?;
    }
    if constant != 0.0 {
        out.add(0.0, 0, constant);
    }
    out.set_remainder_order(rem);
    Ok(out)
}

/// Partie finie integral: constant term of the ball-integral expansion.
pub fn partie_finie(sym: &SymbolExpansion) -> Result<f64> {
    Ok(ball_integral_expansion(sym)?.constant())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    /// Divided by (2π)^p.
    TwoPiPower,
}

/// ∫_{S^{p-1}} f_{-p,0}.
pub fn residue_integral(sym: &SymbolExpansion, normalization: Normalization) -> Result<f64> {
    let p = sym.dim();
    let mut raw = 0.0;
    for t in sym.terms() {
        if same_order(t.order, -(p as f64)) && t.logpow == 0 {
            raw += t.angular.sphere_integral()?;
        }
    }
    Ok(match normalization {
        Normalization::Raw => raw,
        Normalization::TwoPiPower => raw / (2.0 * PI).powi(p as i32),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeOfVariables {
    pub lhs: f64,
    pub rhs: f64,
    /// The anomaly Σ_l (-1)^{l+1}/(l+1) ∫ f_{-p,l}(ξ) log^{l+1}|A^{-1}ξ| dξ.
    pub correction: f64,
}

/// Compares pf(f∘A) with |det A|^{-1}(pf(f) + anomaly).
pub fn change_of_variables_check(sym: &SymbolExpansion, a: &DMatrix<f64>) -> Result<ChangeOfVariables> {
    let p = sym.dim();
    let scaled = sym.scale_variable(a)?;
    let lhs = partie_finie(&scaled)?;
    let inv = a.clone().try_inverse().ok_or(Error::SingularMatrix { det: a.determinant() })?;
    let inv_rows: Vec<f64> = (0..p * p).map(|k| inv[(k / p, k % p)]).collect();
    let mut correction = 0.0;
    for t in sym.terms() {
        if !same_order(t.order, -(p as f64)) {
            continue;
        }
        let l = t.logpow;
        let b = t.angular.clone();
        let m = inv_rows.clone();
        let integrand = AngularFunction::tabulated(p, move |w| {
            let y: Vec<f64> = (0..p).map(|i| (0..p).map(|j| m[i * p + j] * w[j]).sum()).collect();
            b.eval(w) * norm(&y).ln().powi(l as i32 + 1)
        });
        let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
        correction += sign / (l as f64 + 1.0) * integrand.sphere_integral()?;
    }
    let rhs = (partie_finie(sym)? + correction) / a.determinant().abs();
    Ok(ChangeOfVariables { lhs, rhs, correction })
}

/// ∮ ∂f/∂ξ_j from the sphere formula ∫_{S^{p-1}} f_{1-p,0}(ω) ω_j dω.
pub fn stokes_defect(sym: &SymbolExpansion, j: usize) -> Result<f64> {
    let p = sym.dim();
    if j >= p {
        return Err(Error::InvalidInput(format!("axis {j} out of range for dimension {p}")));
    }
    let mut acc = 0.0;
    for t in sym.terms() {
        if same_order(t.order, 1.0 - p as f64) && t.logpow == 0 {
            let g = t.angular.mul(&AngularFunction::Polynomial(Poly::var(p, j)));
            acc += g.sphere_integral()?;
        }
    }
    Ok(acc)
}

/// The same quantity computed as the partie finie of the derivative.
pub fn stokes_defect_brute_force(sym: &SymbolExpansion, j: usize) -> Result<f64> {
    partie_finie(&sym.differentiate(j)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_inverse_square_on_line() {
        let s = SymbolExpansion::cutoff(-2.0, 0, Poly::constant(1, 1.0));
        let e = ball_integral_expansion(&s).unwrap();
        assert_eq!(e.get(-1.0, 0), -2.0);
        assert_eq!(e.constant(), 2.0);
        assert_eq!(partie_finie(&s).unwrap(), 2.0);
    }

    #[test]
    fn pure_power_and_log_cases() {
        let s = SymbolExpansion::polynomial(Poly::monomial(1, vec![2], 1.0));
        let e = ball_integral_expansion(&s).unwrap();
        assert!((e.get(3.0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!(e.constant().abs() < 1e-13);
        let s = SymbolExpansion::cutoff(-1.0, 0, Poly::constant(1, 1.0));
        let e = ball_integral_expansion(&s).unwrap();
        assert_eq!(e.get(0.0, 1), 2.0);
        assert_eq!(e.constant(), 0.0);
    }

    #[test]
    fn japanese_half_on_line() {
        let s = SymbolExpansion::japanese(1, -0.5);
        let v = partie_finie(&s).unwrap();
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-10, "{v}");
        assert_eq!(residue_integral(&s, Normalization::Raw).unwrap(), 2.0);
    }

    #[test]
    fn gaussian_is_ordinary_integral() {
        let v = partie_finie(&SymbolExpansion::gaussian(1)).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-11);
        let v = partie_finie(&SymbolExpansion::gaussian(2)).unwrap();
        assert!((v - PI).abs() < 1e-11);
        assert_eq!(stokes_defect(&SymbolExpansion::gaussian(2), 0).unwrap(), 0.0);
    }

    #[test]
    fn residue_in_two_dimensions() {
        let s = SymbolExpansion::cutoff(-2.0, 0, Poly::constant(2, 1.0));
        let v = residue_integral(&s, Normalization::TwoPiPower).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let x2 = SymbolExpansion::polynomial(Poly::monomial(1, vec![2], 1.0));
        assert_eq!(residue_integral(&x2, Normalization::Raw).unwrap(), 0.0);
    }

    #[test]
    fn change_of_variables_examples() {
        let s = SymbolExpansion::japanese(1, -0.5);
        let c = change_of_variables_check(&s, &DMatrix::from_element(1, 1, 3.0)).unwrap();
        let expect = 2.0 / 3.0 * 6f64.ln();
        assert!((c.lhs - expect).abs() < 1e-9, "{c:?}");
        assert!((c.rhs - expect).abs() < 1e-9, "{c:?}");
        let s = SymbolExpansion::cutoff(-1.0, 0, Poly::constant(1, 1.0));
        let c = change_of_variables_check(&s, &DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!((c.lhs - 2f64.ln()).abs() < 1e-14, "{c:?}");
        assert!((c.rhs - 2f64.ln()).abs() < 1e-14, "{c:?}");
        let c = change_of_variables_check(&SymbolExpansion::japanese(1, -0.5), &DMatrix::identity(1, 1)).unwrap();
        assert_eq!(c.correction, 0.0);
        assert_eq!(c.lhs, c.rhs);
    }

    #[test]
    fn stokes_examples() {
        let x = SymbolExpansion::polynomial(Poly::var(1, 0));
        let f = x.multiply(&SymbolExpansion::japanese(1, -0.5)).unwrap();
        assert!((stokes_defect(&f, 0).unwrap() - 2.0).abs() < 1e-15);
        let b = stokes_defect_brute_force(&f, 0).unwrap();
        assert!((b - 2.0).abs() < 1e-8, "{b}");
        let g = SymbolExpansion::cutoff(-1.0, 0, Poly::var(2, 0));
        assert!((stokes_defect(&g, 0).unwrap() - PI).abs() < 1e-14);
        assert!((stokes_defect_brute_force(&g, 0).unwrap() - PI).abs() < 1e-12);
    }
}
