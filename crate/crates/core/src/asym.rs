//! Large-λ expansion of `F(λ) = ∫ B(ξ) Q(ξ, λ) dξ` for a polyhomogeneous
//! amplitude B and a kernel Q that is jointly homogeneous in (ξ, λ).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansion::AsymptoticExpansion;
use crate::poly::Poly;
use crate::quad::{self, Tolerance};
use crate::regint::{ball_integral, exterior_integral};
use crate::symbol::{binom, norm, AngularFunction, SymbolExpansion};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn is_minus_one(alpha: f64) -> bool {
    (alpha + 1.0).abs() < 1e-12
}

/// Constant term `(-1)^{k+1} k! / (α+1)^{k+1}` of ∫_1^λ r^α log^k r dr (zero for α = -1).
pub fn log_power_constant(alpha: f64, k: u32) -> f64 {
    if is_minus_one(alpha) {
        return 0.0;
    }
    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
    sign * factorial(k) / (alpha + 1.0).powi(k as i32 + 1)
}

/// ∫_1^λ r^α log^k r dr in closed form (any λ > 0).
pub fn log_power_primitive(alpha: f64, k: u32, lambda: f64) -> f64 {
    let ll = lambda.ln();
    if is_minus_one(alpha) {
        return ll.powi(k as i32 + 1) / (k as f64 + 1.0);
    }
    if lambda == 1.0 {
        return 0.0;
    }
    let a1 = alpha + 1.0;
    let lp = lambda.powf(a1);
    let mut acc = crate::sum::Neumaier::new();
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * factorial(k) / (factorial(k - j) * a1.powi(j as i32 + 1)) * lp * ll.powi((k - j) as i32));
    }
    acc.add(log_power_constant(alpha, k));
    acc.value()
}

/// The primitive as an expansion in λ: entries `(α+1, k-j)` plus the constant,
/// or the single entry `(0, k+1)` when α = -1.
pub fn log_power_expansion(alpha: f64, k: u32) -> AsymptoticExpansion {
    let mut e = AsymptoticExpansion::new("lambda", f64::NEG_INFINITY);
    if is_minus_one(alpha) {
        e.add(0.0, k + 1, 1.0 / (k as f64 + 1.0));
        return e;
    }
    let a1 = alpha + 1.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        e.add(a1, k - j, sign * factorial(k) / (factorial(k - j) * a1.powi(j as i32 + 1)));
    }
    e.add(0.0, 0, log_power_constant(alpha, k));
    e
}

/// A kernel Q(ξ, λ) with Q(rξ, rλ) = r^q Q(ξ, λ), described through its
/// profile K(η) = Q(η, 1) and the homogeneous Taylor polynomials of K at 0.
pub trait ParamKernel: Send + Sync {
    fn dim(&self) -> usize;
    /// Homogeneity degree q.
    fn degree(&self) -> f64;
    fn profile(&self, eta: &[f64]) -> f64;
    /// Homogeneous Taylor polynomial of degree j.
    fn taylor(&self, j: usize) -> Poly;
    /// K(η) − Σ_{j ≤ n} K_j(η).
    fn taylor_remainder(&self, eta: &[f64], n: usize) -> f64 {
        let t: f64 = (0..=n).map(|j| self.taylor(j).eval(eta)).sum();
        self.profile(eta) - t
    }
    fn eval(&self, xi: &[f64], lambda: f64) -> f64 {
        let eta: Vec<f64> = xi.iter().map(|v| v / lambda).collect();
        lambda.powf(self.degree()) * self.profile(&eta)
    }
}

/// Q(ξ, λ) = (|ξ|² + λ²)^{-s}, homogeneous of degree q = -2s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketKernel {
    pub dim: usize,
    pub s: f64,
}

impl ParamKernel for BracketKernel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn degree(&self) -> f64 {
        -2.0 * self.s
    }
    fn profile(&self, eta: &[f64]) -> f64 {
        (1.0 + eta.iter().map(|v| v * v).sum::<f64>()).powf(-self.s)
    }
    fn taylor(&self, j: usize) -> Poly {
        if j % 2 == 1 {
            return Poly::zero(self.dim);
        }
        let i = j / 2;
        let mut r2 = Poly::zero(self.dim);
        for k in 0..self.dim {
            r2 = r2.add(&Poly::var(self.dim, k).mul(&Poly::var(self.dim, k)));
        }
        let mut out = Poly::constant(self.dim, binom(-self.s, i));
        for _ in 0..i {
            out = out.mul(&r2);
        }
        out
    }
    fn taylor_remainder(&self, eta: &[f64], n: usize) -> f64 {
        let u = eta.iter().map(|v| v * v).sum::<f64>();
        let first = n / 2 + 1;
        if u < 0.25 {
            let mut acc = 0.0;
            let mut c = binom(-self.s, first);
            let mut up = u.powi(first as i32);
            for i in first..first + 500 {
                let t = c * up;
                acc += t;
                if t.abs() <= 1e-18 * acc.abs() || t == 0.0 {
                    break;
                }
                c *= (-self.s - i as f64) / (i + 1) as f64;
                up *= u;
            }
            acc
        } else {
            let t: f64 = (0..first).map(|i| binom(-self.s, i) * u.powi(i as i32)).sum();
            (1.0 + u).powf(-self.s) - t
        }
    }
}

/// One-dimensional kernel given only by its profile; Taylor coefficients at 0
/// are obtained from Chebyshev interpolation on [-h, h] and then verified.
#[derive(Clone)]
pub struct ProfileKernel1d {
    q: f64,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    coeffs: Vec<f64>,
}

impl ProfileKernel1d {
    /// `order` Taylor coefficients are kept; the remainder check samples
    /// |η| ∈ [1e-2, 1e-1] and requires R_n(η)/η^{n+1} to stay bounded.
    pub fn new(q: f64, profile: impl Fn(f64) -> f64 + Send + Sync + 'static, order: usize) -> Result<Self> {
        let h = 0.5;
        let deg = order + 12;
        let m = deg + 1;
        // Chebyshev nodes and interpolant in monomial basis of t = η/h
        let nodes: Vec<f64> = (0..m).map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos()).collect();
        let vals: Vec<f64> = nodes.iter().map(|t| profile(h * t)).collect();
        let mut cheb = vec![0.0; m];
        for (j, c) in cheb.iter_mut().enumerate() {
            let s: f64 = nodes.iter().zip(&vals).map(|(t, v)| v * (j as f64 * t.acos()).cos()).sum();
            *c = s * if j == 0 { 1.0 } else { 2.0 } / m as f64;
        }
        // T_j to monomials
        let mut t_prev = vec![0.0; m];
        let mut t_cur = vec![0.0; m];
        t_prev[0] = 1.0;
        if m > 1 {
            t_cur[1] = 1.0;
        }
        let mut mono = vec![0.0; m];
        for (j, c) in cheb.iter().enumerate() {
            let tj = if j == 0 {
                t_prev.clone()
            } else if j == 1 {
                t_cur.clone()
            } else {
                let mut next = vec![0.0; m];
                for i in 0..m {
                    if i > 0 {
                        next[i] += 2.0 * t_cur[i - 1];
                    }
                    next[i] -= t_prev[i];
                }
                t_prev = std::mem::replace(&mut t_cur, next.clone());
                next
            };
            for i in 0..m {
                mono[i] += c * tj[i];
            }
        }
        let coeffs: Vec<f64> = (0..=order).map(|i| mono[i] / h.powi(i as i32)).collect();
        let kernel = Self { q, profile: Arc::new(profile), coeffs };
        let n = order;
        let ratio = |e: f64| kernel.taylor_remainder(&[e], n) / e.powi(n as i32 + 1);
        let samples: Vec<f64> = [0.02, 0.04, 0.06, 0.08, 0.1].iter().map(|e| ratio(*e)).collect();
        let scale = samples.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let spread = samples.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v))
            - samples.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        if !(spread <= scale.max(1.0) * 10.0) {
            return Err(Error::Hypothesis("Taylor remainder of the kernel profile is not O(|η|^{n+1})".into()));
        }
        Ok(kernel)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }
}

impl ParamKernel for ProfileKernel1d {
    fn dim(&self) -> usize {
        1
    }
    fn degree(&self) -> f64 {
        self.q
    }
    fn profile(&self, eta: &[f64]) -> f64 {
        (self.profile)(eta[0])
    }
    fn taylor(&self, j: usize) -> Poly {
        Poly::monomial(1, vec![j as u32], self.coeffs.get(j).copied().unwrap_or(0.0))
    }
}

/// Default Taylor depth: the smallest N with b + N + 1 > -n + 4 that also
/// makes every term of B integrable against the Taylor remainder at 0.
pub fn default_depth(b: &SymbolExpansion) -> usize {
    let n = b.dim() as f64;
    let mut need = 3.0 - n - b.order();
    for t in b.terms() {
        need = need.max(-t.order - n - 1.0);
    }
    let mut depth = 0usize;
    while (depth as f64) <= need + 1e-12 {
        depth += 1;
    }
    // depth is now the smallest integer strictly above `need`
    depth.max(if need < 0.0 { 0 } else { 1 })
}

/// Analytic expansion of F(λ) = ∫ B(ξ) Q(ξ, λ) dξ as λ → ∞.
///
/// B must consist of a core on the unit ball and exact terms outside it.
/// Coefficients at coinciding exponents are aggregated.
pub fn bq_expansion(b: &SymbolExpansion, q: &dyn ParamKernel, depth: Option<usize>) -> Result<AsymptoticExpansion> {
    let n = b.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.dim() });
    }
    if !b.remainder_is_zero() || !b.layers().is_empty() || b.radius() != 1.0 {
        return Err(Error::Unsupported("amplitude must have exact terms outside the unit ball".into()));
    }
    let nf = n as f64;
    let qd = q.degree();
    if b.order() + qd + nf >= 0.0 {
        return Err(Error::Hypothesis(format!("b + q + n = {} must be negative", b.order() + qd + nf)));
    }
    let big_n = depth.unwrap_or_else(|| default_depth(b));
    for t in b.terms() {
        if t.order + nf + big_n as f64 + 1.0 <= 0.0 {
            return Err(Error::InsufficientDepth { remainder_order: qd - big_n as f64 - 1.0, dim: n });
        }
    }
    let mut out = AsymptoticExpansion::new("lambda", qd - big_n as f64 - 1.0);
    let taylor: Vec<Poly> = (0..=big_n).map(|i| q.taylor(i)).collect();

    // |ξ| ≤ 1: Taylor moments of the core
    if !b.core_is_zero() {
        let core = b.core();
        for (i, ki) in taylor.iter().enumerate() {
            if ki.is_zero() {
                continue;
            }
            let m = ball_integral(&|x: &[f64]| core.eval(x) * ki.eval(x), &|w: &[f64]| b.core_breaks(w), n, 1.0)?;
            out.add(qd - i as f64, 0, m);
        }
    }

    // |ξ| ≥ 1: substitute ξ = λη and split |η| at 1
    for t in b.terms() {
        let a = t.order;
        let l = t.logpow;
        let s_i: Vec<f64> = taylor
            .iter()
            .map(|ki| t.angular.mul(&AngularFunction::Polynomial(ki.clone())).sphere_integral())
            .collect::<Result<_>>()?;
        let mut consts = vec![0.0; l as usize + 1];
        for (i, si) in s_i.iter().enumerate() {
            if *si == 0.0 {
                continue;
            }
            let b1 = a + nf + i as f64;
            for m in 0..=l {
                let cm = binom(l as f64, m as usize);
                let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
                if b1.abs() < 1e-12 {
                    out.add(qd + nf + a, l + 1, cm * si * sign_m / (m as f64 + 1.0));
                } else {
                    for j in 0..=m {
                        let c = -cm * si * sign_m * factorial(m) / (factorial(m - j) * b1.powi(j as i32 + 1));
                        out.add(qd - i as f64, l - j, c);
                    }
                    consts[m as usize] -= si * log_power_constant(b1 - 1.0, m);
                }
            }
        }
        for m in 0..=l {
            let ang = t.angular.clone();
            let outer = exterior_integral(
                &|x: &[f64]| {
                    let r = norm(x);
                    let w: Vec<f64> = x.iter().map(|v| v / r).collect();
                    ang.eval(&w) * r.powf(a) * r.ln().powi(m as i32) * q.profile(x)
                },
                n,
                1.0,
            )?;
            let inner = ball_integral(
                &|x: &[f64]| {
                    let r = norm(x);
                    if r == 0.0 {
                        return 0.0;
                    }
                    let w: Vec<f64> = x.iter().map(|v| v / r).collect();
                    ang.eval(&w) * r.powf(a) * r.ln().powi(m as i32) * q.taylor_remainder(x, big_n)
                },
                &|_: &[f64]| Vec::new(),
                n,
                1.0,
            )?;
            let cm = binom(l as f64, m as usize);
            out.add(qd + nf + a, l - m, cm * (outer + inner + consts[m as usize]));
        }
    }
    Ok(out)
}

/// Direct quadrature of F(λ), with breakpoints at |ξ| = 1 and |ξ| = λ.
///
/// The relative tolerance is 1e-13 so that fits over λ ∈ [10², 10⁴] resolve
/// sub-leading coefficients; the absolute error is additionally required to
/// be below 1e-11.
pub fn numeric_f(b: &SymbolExpansion, q: &dyn ParamKernel, lambda: f64) -> Result<f64> {
    let n = b.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.dim() });
    }
    if b.order() + q.degree() + n as f64 >= 0.0 {
        return Err(Error::Hypothesis("b + q + n must be negative".into()));
    }
    let tol = Tolerance::new(1e-30, 1e-13);
    let rb = b.radius();
    let radial = |w: &[f64]| -> Result<f64> {
        let g = |r: f64| {
            let x: Vec<f64> = w.iter().map(|v| r * v).collect();
            b.eval_unchecked(&x) * q.eval(&x, lambda) * r.powi(n as i32 - 1)
        };
        let mut pts = vec![0.0];
        let mut inner: Vec<f64> = b.core_breaks(w).into_iter().filter(|r| *r > 0.0 && *r < lambda).collect();
        inner.push(rb);
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        pts.extend(inner.into_iter().filter(|r| *r < lambda));
        pts.push(lambda);
        let head = quad::integrate_pieces(&g, &pts, tol)?;
        let tail = quad::integrate_to_infinity(g, lambda, tol)?;
        let err = head.error + tail.error;
        if err > 1e-11 {
            return Err(Error::Quadrature { what: format!("F({lambda})"), tol: 1e-11, err });
        }
        Ok(head.value + tail.value)
    };
    quad::sphere_integrate(&radial, n, 1e-14)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// (exponent, logpow, coefficient) in the order of the basis.
    pub coefficients: Vec<(f64, u32, f64)>,
    /// Root mean square of the relative residuals.
    pub residual: f64,
    /// Ratio of extreme singular values of the scaled design matrix.
    pub condition: f64,
}

impl FitResult {
    pub fn get(&self, e: f64, l: u32) -> Option<f64> {
        self.coefficients.iter().find(|(x, m, _)| (x - e).abs() < 1e-12 && *m == l).map(|(_, _, c)| *c)
    }
}

/// Least-squares fit of samples (λ, F) in the basis λ^e log^l λ, rows weighted
/// by 1/|F| and columns equilibrated before an SVD solve.
pub fn fit_expansion(samples: &[(f64, f64)], basis: &[(f64, u32)]) -> Result<FitResult> {
    let m = samples.len();
    let k = basis.len();
    if k == 0 || m < 2 * k {
        return Err(Error::InvalidInput(format!("need at least {} samples for {} basis functions, got {m}", 2 * k, k)));
    }
    let weights: Vec<f64> = samples.iter().map(|(_, f)| if *f != 0.0 { 1.0 / f.abs() } else { 1.0 }).collect();
    let mut a = DMatrix::from_fn(m, k, |i, j| {
        let (lam, _) = samples[i];
        let (e, l) = basis[j];
        weights[i] * lam.powf(e) * lam.ln().powi(l as i32)
    });
    let col_scale: Vec<f64> = (0..k).map(|j| a.column(j).amax().max(1e-300)).collect();
    for j in 0..k {
        let s = col_scale[j];
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let rhs = DVector::from_fn(m, |i, _| weights[i] * samples[i].1);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < 1e14) {
        return Err(Error::RankDeficient { condition });
    }
    let x = svd.solve(&rhs, 0.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let resid = &a * &x - &rhs;
    let residual = (resid.norm_squared() / m as f64).sqrt();
    let coefficients = basis.iter().enumerate().map(|(j, (e, l))| (*e, *l, x[j] / col_scale[j])).collect();
    Ok(FitResult { coefficients, residual, condition })
}

/// Samples F at `count` log-spaced points in [lo, hi], in parallel.
pub fn sample_f(b: &SymbolExpansion, q: &dyn ParamKernel, lo: f64, hi: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    let lambdas: Vec<f64> =
        (0..count).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1).max(1) as f64).exp()).collect();
    lambdas.par_iter().map(|l| Ok((*l, numeric_f(b, q, *l)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn primitive_examples() {
        assert_eq!(log_power_primitive(0.0, 0, 5.0), 4.0);
        assert!((log_power_primitive(-1.0, 1, std::f64::consts::E) - 0.5).abs() < 1e-15);
        assert_eq!(log_power_expansion(-2.0, 1).constant(), 1.0);
    }

    #[test]
    fn primitive_derivative_matches_integrand() {
        for &(a, k) in &[(0.5, 0u32), (-2.0, 1), (-1.0, 2), (1.3, 3)] {
            for &lam in &[1.5, 3.0, 10.0] {
                let h = 1e-5 * lam;
                let d = (log_power_primitive(a, k, lam + h) - log_power_primitive(a, k, lam - h)) / (2.0 * h);
                let f = lam.powf(a) * lam.ln().powi(k as i32);
                assert!((d - f).abs() < 1e-8 * f.abs().max(1.0), "{a} {k} {lam}");
            }
        }
    }

    #[test]
    fn bracket_taylor_remainder_series_matches_direct() {
        let k = BracketKernel { dim: 2, s: 0.75 };
        let eta = [0.3, 0.2];
        let direct = k.profile(&eta) - (0..=4).map(|j| k.taylor(j).eval(&eta)).sum::<f64>();
        assert!((k.taylor_remainder(&eta, 4) - direct).abs() < 1e-15);
    }

    #[test]
    fn profile_kernel_recovers_bracket_coefficients() {
        let k = ProfileKernel1d::new(-2.0, |e| 1.0 / (1.0 + e * e), 6).unwrap();
        let c = k.coefficients();
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!(c[1].abs() < 1e-12);
        assert!((c[2] + 1.0).abs() < 1e-10);
        assert!((c[4] - 1.0).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn constant_amplitude_gives_single_entry() {
        let b = SymbolExpansion::polynomial(Poly::constant(1, 1.0));
        let q = BracketKernel { dim: 1, s: 1.0 };
        let e = bq_expansion(&b, &q, None).unwrap();
        assert!((e.get(-1.0, 0) - PI).abs() < 1e-11);
        for (x, l, c) in e.entries() {
            if !(x == -1.0 && l == 0) {
                assert!(c.abs() < 1e-11, "entry ({x},{l}) = {c}");
            }
        }
        assert!((numeric_f(&b, &q, 10.0).unwrap() - PI / 10.0).abs() < 1e-13);
        assert!((numeric_f(&b, &q, 1.0).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_exact_coefficients() {
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let l = 100.0 * 10f64.powf(i as f64 / 5.5);
                (l, PI / l)
            })
            .collect();
        let f = fit_expansion(&samples, &[(-1.0, 0), (-2.0, 0), (-3.0, 0)]).unwrap();
        assert!((f.get(-1.0, 0).unwrap() - PI).abs() < 1e-10);
        let samples: Vec<(f64, f64)> = samples.iter().map(|(l, _)| (*l, 2.5)).collect();
        let f = fit_expansion(&samples, &[(0.0, 0), (-1.0, 0)]).unwrap();
        assert!((f.get(0.0, 0).unwrap() - 2.5).abs() < 1e-12);
        assert!(f.get(-1.0, 0).unwrap().abs() < 1e-8);
        assert!(fit_expansion(&samples[..3], &[(0.0, 0), (-1.0, 0)]).is_err());
    }
}
