//! Traces of parameter-dependent Fourier multipliers on the circle.
//!
//! The operator acts on e^{ikθ} by a(k, μ). Its trace is a function of μ,
//! defined modulo polynomials once the multiplier stops being trace class.
//! Classes are represented by the base-point-0 representative with zero
//! integration constants.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::asym::{fit_expansion, FitResult};
use crate::em::{positive_sum, C64};
use crate::error::{Error, Result};
use crate::expansion::AsymptoticExpansion;
use crate::poly::Poly;
use crate::quad::{self, Tolerance};
use crate::regint::{partie_finie, residue_integral, stokes_defect, Normalization};
use crate::spectral::rgamma;
use crate::symbol::{AngularFunction, Field, HomTerm, SymbolExpansion};

/// First explicit index of the lattice sums; Euler–Maclaurin beyond.
const EM_START: usize = 24;
/// Entries kept per bracket term in the analytic expansion.
const SERIES_DEPTH: usize = 12;
/// Radius of the numerically integrated core in `tr_bar`.
const PF_RADIUS: f64 = 8.0;
/// Beyond this radius the remainder of the trace expansion is dropped.
const PF_CUTOFF: f64 = 64.0;
const INTEGRAL_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);

/// coeff · μ^p · (ξ² + μ² + κ)^s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketTerm {
    pub coeff: f64,
    pub mu_power: u32,
    pub s: f64,
    pub kappa: f64,
}

impl BracketTerm {
    pub fn order(&self) -> f64 {
        self.mu_power as f64 + 2.0 * self.s
    }

    fn eval(&self, xi: C64, mu: f64) -> C64 {
        let b = xi * xi + mu * mu + self.kappa;
        b.powf(self.s) * (self.coeff * mu.powi(self.mu_power as i32))
    }

    fn same_shape(&self, o: &BracketTerm) -> bool {
        self.mu_power == o.mu_power && self.s == o.s && self.kappa == o.kappa
    }
}

/// ∂_μ^j a(ξ, μ) at complex ξ.
pub type DerivativeFn = Arc<dyn Fn(C64, f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum ParamMultiplier {
    /// Finite sums of bracket terms. Closed under ∂_μ and multiplication by μ.
    Brackets(Vec<BracketTerm>),
    /// `derivatives[j]` is ∂_μ^j a at complex ξ; both halves of the lattice
    /// are summed, so no symmetry in ξ is assumed.
    Custom { order: f64, derivatives: Vec<DerivativeFn> },
}

impl std::fmt::Debug for ParamMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamMultiplier::Brackets(t) => f.debug_tuple("Brackets").field(t).finish(),
            ParamMultiplier::Custom { order, derivatives } => {
                f.debug_struct("Custom").field("order", order).field("derivatives", &derivatives.len()).finish()
            }
        }
    }
}

fn canonical(mut terms: Vec<BracketTerm>) -> Vec<BracketTerm> {
    let mut out: Vec<BracketTerm> = Vec::new();
    for t in terms.drain(..) {
        if t.coeff == 0.0 {
            continue;
        }
        match out.iter_mut().find(|o| o.same_shape(&t)) {
            Some(o) => o.coeff += t.coeff,
            None => out.push(t),
        }
    }
    out.retain(|t| t.coeff != 0.0);
    out.sort_by(|a, b| a.kappa.total_cmp(&b.kappa).then(a.s.total_cmp(&b.s)).then(a.mu_power.cmp(&b.mu_power)));
    out
}

impl ParamMultiplier {
    pub fn zero() -> Self {
        ParamMultiplier::Brackets(Vec::new())
    }

    /// (ξ² + μ² + κ)^s.
    pub fn bracket(s: f64, kappa: f64) -> Result<Self> {
        Self::from_terms(vec![BracketTerm { coeff: 1.0, mu_power: 0, s, kappa }])
    }

    /// c · μ^p as a multiplier constant in ξ.
    pub fn mu_monomial(p: u32, c: f64) -> Self {
        ParamMultiplier::Brackets(canonical(vec![BracketTerm { coeff: c, mu_power: p, s: 0.0, kappa: 1.0 }]))
    }

    pub fn from_terms(terms: Vec<BracketTerm>) -> Result<Self> {
        for t in &terms {
            if !(t.kappa > 0.0) || !t.s.is_finite() || !t.coeff.is_finite() {
                return Err(Error::InvalidInput(format!("bad bracket term {t:?}: need κ > 0 and finite s")));
            }
        }
        Ok(ParamMultiplier::Brackets(canonical(terms)))
    }

    pub fn custom(order: f64, derivatives: Vec<DerivativeFn>) -> Self {
        ParamMultiplier::Custom { order, derivatives }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ParamMultiplier::Brackets(t) if t.is_empty())
    }

    pub fn terms(&self) -> Option<&[BracketTerm]> {
        match self {
            ParamMultiplier::Brackets(t) => Some(t),
            ParamMultiplier::Custom { .. } => None,
        }
    }

    /// Parametric order; −∞ for the zero multiplier.
    pub fn order(&self) -> f64 {
        match self {
            ParamMultiplier::Brackets(t) => t.iter().map(BracketTerm::order).fold(f64::NEG_INFINITY, f64::max),
            ParamMultiplier::Custom { order, .. } => *order,
        }
    }

    /// ∂_μ.
    pub fn derivative(&self) -> Self {
        match self {
            ParamMultiplier::Brackets(terms) => {
                let mut out = Vec::with_capacity(2 * terms.len());
                for t in terms {
                    if t.mu_power > 0 {
                        out.push(BracketTerm { coeff: t.coeff * t.mu_power as f64, mu_power: t.mu_power - 1, ..*t });
                    }
                    if t.s != 0.0 {
                        out.push(BracketTerm {
                            coeff: 2.0 * t.s * t.coeff,
                            mu_power: t.mu_power + 1,
                            s: t.s - 1.0,
                            kappa: t.kappa,
                        });
                    }
                }
                ParamMultiplier::Brackets(canonical(out))
            }
            ParamMultiplier::Custom { order, derivatives } => ParamMultiplier::Custom {
                order: order - 1.0,
                derivatives: derivatives.iter().skip(1).cloned().collect(),
            },
        }
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |a, _| a.derivative())
    }

    /// μ · A.
    pub fn mul_mu(&self) -> Result<Self> {
        match self {
            ParamMultiplier::Brackets(terms) => Ok(ParamMultiplier::Brackets(canonical(
                terms.iter().map(|t| BracketTerm { mu_power: t.mu_power + 1, ..*t }).collect(),
            ))),
            ParamMultiplier::Custom { .. } => Err(Error::Unsupported("μ·A for closure multipliers".into())),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (ParamMultiplier::Brackets(a), ParamMultiplier::Brackets(b)) => {
                Ok(ParamMultiplier::Brackets(canonical(a.iter().chain(b).copied().collect())))
            }
            _ => Err(Error::Unsupported("sums involving closure multipliers".into())),
        }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        match self {
            ParamMultiplier::Brackets(a) => Ok(ParamMultiplier::Brackets(canonical(
                a.iter().map(|t| BracketTerm { coeff: c * t.coeff, ..*t }).collect(),
            ))),
            _ => Err(Error::Unsupported("scaling a closure multiplier".into())),
        }
    }

    /// Product of commuting multipliers. Brackets multiply when their κ agree
    /// (κ is irrelevant for s = 0).
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let (ParamMultiplier::Brackets(a), ParamMultiplier::Brackets(b)) = (self, other) else {
            return Err(Error::Unsupported("products involving closure multipliers".into()));
        };
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                let kappa = if x.s == 0.0 {
                    y.kappa
                } else if y.s == 0.0 || x.kappa == y.kappa {
                    x.kappa
                } else {
                    return Err(Error::Unsupported(format!(
                        "product of brackets with κ = {} and {}",
                        x.kappa, y.kappa
                    )));
                };
                out.push(BracketTerm {
                    coeff: x.coeff * y.coeff,
                    mu_power: x.mu_power + y.mu_power,
                    s: x.s + y.s,
                    kappa,
                });
            }
        }
        Ok(ParamMultiplier::Brackets(canonical(out)))
    }

    /// ∂_μ^j a(ξ, μ).
    pub fn eval_derivative(&self, j: usize, xi: C64, mu: f64) -> Result<C64> {
        match self {
            ParamMultiplier::Brackets(_) => {
                let d = self.nth_derivative(j);
                Ok(d.terms().unwrap().iter().map(|t| t.eval(xi, mu)).sum())
            }
            ParamMultiplier::Custom { derivatives, .. } => {
                derivatives.get(j).map(|f| f(xi, mu)).ok_or(Error::MissingDerivative)
            }
        }
    }

    pub fn eval(&self, xi: f64, mu: f64) -> Result<f64> {
        Ok(self.eval_derivative(0, C64::new(xi, 0.0), mu)?.re)
    }
}

/// Σ_{k∈Z} ∂_μ^j a(k, μ); requires order − j < −1.
pub fn lattice_trace(a: &ParamMultiplier, j: usize, mu: f64) -> Result<f64> {
    if a.is_zero() {
        return Ok(0.0);
    }
    let order = a.order() - j as f64;
    if order >= -1.0 {
        return Err(Error::Hypothesis(format!("∂_μ^{j} A has order {order}, not trace class")));
    }
    match a {
        ParamMultiplier::Brackets(_) => {
            let d = a.nth_derivative(j);
            let terms = d.terms().unwrap().to_vec();
            let f = |z: C64| -> C64 { terms.iter().map(|t| t.eval(z, mu)).sum() };
            let zero = f(C64::new(0.0, 0.0)).re;
            // brackets are even in ξ
            Ok(zero + 2.0 * positive_sum(&f, EM_START)?.re)
        }
        ParamMultiplier::Custom { derivatives, .. } => {
            let g = derivatives.get(j).ok_or(Error::MissingDerivative)?.clone();
            let plus = |z: C64| g(z, mu);
            let minus = |z: C64| g(-z, mu);
            Ok(g(C64::new(0.0, 0.0), mu).re + positive_sum(&plus, EM_START)?.re + positive_sum(&minus, EM_START)?.re)
        }
    }
}

/// Smallest α ≥ 0 with m − α < −1.
pub fn minimal_alpha(order: f64) -> usize {
    if order < -1.0 {
        0
    } else {
        (order + 1.0).floor() as usize + 1
    }
}

/// The base-point-0 representative of TR(A), a class modulo polynomials of
/// degree below `alpha`.
#[derive(Debug, Clone)]
pub struct TraceFunction {
    multiplier: ParamMultiplier,
    alpha: usize,
}

pub fn trace_function(a: &ParamMultiplier) -> Result<TraceFunction> {
    TraceFunction::with_alpha(a, minimal_alpha(a.order()))
}

impl TraceFunction {
    /// Representative built from α derivatives; α may exceed the minimum.
    pub fn with_alpha(a: &ParamMultiplier, alpha: usize) -> Result<Self> {
        if !a.is_zero() && alpha < minimal_alpha(a.order()) {
            return Err(Error::InvalidInput(format!(
                "α = {alpha} leaves ∂^α A of order {} ≥ −1",
                a.order() - alpha as f64
            )));
        }
        if let ParamMultiplier::Custom { derivatives, .. } = a {
            if derivatives.len() <= alpha {
                return Err(Error::MissingDerivative);
            }
        }
        Ok(Self { multiplier: a.clone(), alpha })
    }

    pub fn multiplier(&self) -> &ParamMultiplier {
        &self.multiplier
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Degree bound d of the polynomial ambiguity (polynomials of degree < d).
    pub fn ambiguity_degree(&self) -> usize {
        self.alpha
    }

    pub fn value(&self, mu: f64) -> Result<f64> {
        self.derivative(mu, 0)
    }

    /// j-th μ-derivative of the representative.
    pub fn derivative(&self, mu: f64, j: usize) -> Result<f64> {
        if j >= self.alpha {
            return lattice_trace(&self.multiplier, j, mu);
        }
        if mu == 0.0 {
            return Ok(0.0);
        }
        // Cauchy's formula for the (α−j)-fold integral from 0.
        let n = self.alpha - j - 1;
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let failure = std::cell::RefCell::new(None);
        let integrand = |t: f64| match lattice_trace(&self.multiplier, self.alpha, t) {
            Ok(g) => (mu - t).powi(n as i32) / fact * g,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let v = if mu > 0.0 {
            quad::integrate(integrand, 0.0, mu, INTEGRAL_TOL)
        } else {
            quad::integrate(integrand, mu, 0.0, INTEGRAL_TOL).map(|e| quad::Estimate { value: -e.value, ..e })
        };
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(v?.value)
    }
}

/// (exponent, logpow, coefficient) of the large-|μ| expansion on the side
/// sign(μ) = `side`, including polynomial entries. None for closure
/// multipliers.
fn analytic_entries(a: &ParamMultiplier, side: f64) -> Option<Vec<(f64, u32, f64)>> {
    let terms = a.terms()?;
    let mut out = AsymptoticExpansion::new("mu", f64::NEG_INFINITY);
    for t in terms {
        let sign = if side < 0.0 && t.mu_power % 2 == 1 { -1.0 } else { 1.0 };
        let c = t.coeff * sign;
        let p = t.mu_power as f64;
        let h = t.s + 0.5;
        let log_case = h >= 0.0 && h == h.round();
        if !log_case {
            // √π Γ(−s−1/2)/Γ(−s) c^{2s+1}, c² = μ² + κ
            let lead = PI.sqrt() * gamma(-h) * rgamma(-t.s);
            if lead == 0.0 {
                continue;
            }
            let mut binom = 1.0;
            for i in 0..SERIES_DEPTH {
                out.add(2.0 * h - 2.0 * i as f64 + p, 0, c * lead * binom * t.kappa.powi(i as i32));
                binom *= (h - i as f64) / (i as f64 + 1.0);
            }
        } else {
            // finite part K c^{2j} log c², K = √π (−1)^{j+1} / (j! Γ(1/2 − j))
            let j = h as usize;
            let jf: f64 = (1..=j).map(|i| i as f64).product();
            let k = PI.sqrt() * if j % 2 == 0 { -1.0 } else { 1.0 } / (jf * gamma(0.5 - j as f64));
            let mut binom = 1.0;
            for i in 0..=j {
                let w = c * k * binom * t.kappa.powi(i as i32);
                let e = 2.0 * (j - i) as f64 + p;
                out.add(e, 1, 2.0 * w);
                for m in 1..SERIES_DEPTH {
                    let sg = if m % 2 == 1 { 1.0 } else { -1.0 };
                    out.add(e - 2.0 * m as f64, 0, w * sg * t.kappa.powi(m as i32) / m as f64);
                }
                binom *= (j - i) as f64 / (i as f64 + 1.0);
            }
        }
    }
    out.drop_zeros();
    Some(out.entries())
}

fn is_integer_power(e: f64, l: u32) -> bool {
    l == 0 && e >= 0.0 && e == e.round()
}

/// Removes the polynomial part: at |μ|^n the pair (c₊, c₋) carries μ^n with
/// weight (c₊ + (−1)^n c₋)/2.
fn drop_polynomials(
    plus: &[(f64, u32, f64)],
    minus: &[(f64, u32, f64)],
) -> (Vec<(f64, u32, f64)>, Vec<(f64, u32, f64)>) {
    let find = |v: &[(f64, u32, f64)], e: f64| v.iter().filter(|x| x.1 == 0 && x.0 == e).map(|x| x.2).sum::<f64>();
    let strip = |own: &[(f64, u32, f64)], other: &[(f64, u32, f64)]| -> Vec<(f64, u32, f64)> {
        let mut out: Vec<(f64, u32, f64)> = own.iter().filter(|x| !is_integer_power(x.0, x.1)).copied().collect();
        let mut powers: Vec<f64> =
            own.iter().chain(other).filter(|x| is_integer_power(x.0, x.1)).map(|x| x.0).collect();
        powers.sort_by(f64::total_cmp);
        powers.dedup();
        for e in powers {
            let parity = if (e as u64) % 2 == 0 { 1.0 } else { -1.0 };
            let c = 0.5 * (find(own, e) - parity * find(other, e));
            if c != 0.0 {
                out.push((e, 0, c));
            }
        }
        out
    };
    (strip(plus, minus), strip(minus, plus))
}

/// Analytic expansion of TR(A) as μ → +∞. Polynomial entries are dropped when
/// the class is only defined modulo polynomials.
pub fn trace_expansion(a: &ParamMultiplier) -> Result<AsymptoticExpansion> {
    let alpha = minimal_alpha(a.order());
    let err = || Error::Unsupported("analytic trace expansion of a closure multiplier".into());
    let mut entries = analytic_entries(a, 1.0).ok_or_else(err)?;
    if alpha > 0 {
        entries = drop_polynomials(&entries, &analytic_entries(a, -1.0).ok_or_else(err)?).0;
    }
    let lowest = entries.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let mut out = AsymptoticExpansion::new("mu", if entries.is_empty() { f64::NEG_INFINITY } else { lowest - 2.0 });
    for (e, l, c) in entries {
        out.add(e, l, c);
    }
    if out.max_logpow() > 1 {
        return Err(Error::Inconsistent(format!("trace expansion has log power {}", out.max_logpow())));
    }
    Ok(out)
}

/// Least-squares fit of the representative on μ ∈ [20, 2000].
///
/// Bracket multipliers use the leading analytic exponents plus the
/// polynomials of degree below α; closure multipliers use exponents
/// m+1, m, m−1, m−2 with log powers 0 and 1.
pub fn fitted_trace_expansion(a: &ParamMultiplier) -> Result<FitResult> {
    let tf = trace_function(a)?;
    let mut basis: Vec<(f64, u32)> = match analytic_entries(a, 1.0) {
        Some(entries) => {
            let mut v: Vec<(f64, u32)> = entries.iter().map(|(e, l, _)| (*e, *l)).collect();
            v.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.cmp(&x.1)));
            let floor = v.first().map(|b| b.0 - 8.0).unwrap_or(0.0);
            v.retain(|b| b.0 > floor);
            v
        }
        None => {
            let m = a.order();
            (0..4).flat_map(|i| [(m + 1.0 - i as f64, 1), (m + 1.0 - i as f64, 0)]).collect()
        }
    };
    for n in 0..tf.alpha() {
        if !basis.iter().any(|(e, l)| *l == 0 && (*e - n as f64).abs() < 1e-12) {
            basis.push((n as f64, 0));
        }
    }
    if basis.is_empty() {
        return Ok(FitResult { coefficients: Vec::new(), residual: 0.0, condition: 1.0 });
    }
    let count = (2 * basis.len()).max(24);
    let samples = (0..count)
        .map(|i| {
            let mu = 20f64 * 100f64.powf(i as f64 / (count - 1) as f64);
            Ok((mu, tf.value(mu)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_expansion(&samples, &basis)?;
    if fit.coefficients.iter().any(|c| c.1 > 1) {
        return Err(Error::Inconsistent("fitted trace expansion has log power above 1".into()));
    }
    Ok(fit)
}

fn side_value(entries: &[(f64, u32, f64)], r: f64) -> f64 {
    entries.iter().map(|(e, l, c)| c * r.powf(*e) * r.ln().powi(*l as i32)).sum()
}

/// Coefficients of the polynomial part P in rep = analytic + P on one side.
fn fit_polynomial(
    rep: &(dyn Fn(f64) -> Result<f64> + Sync),
    entries: &[(f64, u32, f64)],
    side: f64,
    degree: usize,
) -> Result<Vec<f64>> {
    if degree == 0 {
        return Ok(Vec::new());
    }
    let count = 2 * degree + 6;
    let mut m = DMatrix::zeros(count, degree);
    let mut rhs = DVector::zeros(count);
    for i in 0..count {
        let r = PF_RADIUS * 4f64.powf(i as f64 / (count - 1) as f64);
        let y = rep(side * r)? - side_value(entries, r);
        for n in 0..degree {
            m[(i, n)] = (r / PF_RADIUS).powi(n as i32);
        }
        rhs[i] = y;
    }
    let x = m.svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::InvalidInput(e.to_string()))?;
    // coefficients of |μ|^n
    Ok((0..degree).map(|n| x[n] / PF_RADIUS.powi(n as i32)).collect())
}

/// Merges the two sides into one-dimensional homogeneous terms.
fn two_sided_terms(plus: &[(f64, u32, f64)], minus: &[(f64, u32, f64)]) -> Vec<HomTerm> {
    let mut keys: Vec<(f64, u32)> = plus.iter().chain(minus).map(|(e, l, _)| (*e, *l)).collect();
    keys.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.cmp(&x.1)));
    keys.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-12 && x.1 == y.1);
    let find = |v: &[(f64, u32, f64)], k: (f64, u32)| {
        v.iter().filter(|(e, l, _)| (e - k.0).abs() < 1e-12 && *l == k.1).map(|x| x.2).sum::<f64>()
    };
    keys.into_iter()
        .filter_map(|k| {
            let cp = find(plus, k);
            let cm = find(minus, k);
            let mut poly = Poly::constant(1, 0.5 * (cp + cm));
            poly.add_term(vec![1], 0.5 * (cp - cm));
            let poly = poly.pruned(0.0);
            (!poly.is_zero()).then(|| HomTerm::new(k.0, k.1, AngularFunction::Polynomial(poly)))
        })
        .collect()
}

/// Partie finie over R of a representative of TR(A) with the analytic
/// expansion of A and a fitted polynomial part of degree below α.
fn pf_of_representative(
    a: &ParamMultiplier,
    alpha: usize,
    rep: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
) -> Result<f64> {
    let plus = analytic_entries(a, 1.0)
        .ok_or_else(|| Error::Unsupported("partie finie of a closure multiplier trace".into()))?;
    let minus = analytic_entries(a, -1.0).unwrap();
    let mut plus_all = plus.clone();
    let mut minus_all = minus.clone();
    for (n, c) in fit_polynomial(rep.as_ref(), &plus, 1.0, alpha)?.into_iter().enumerate() {
        plus_all.push((n as f64, 0, c));
    }
    for (n, c) in fit_polynomial(rep.as_ref(), &minus, -1.0, alpha)?.into_iter().enumerate() {
        minus_all.push((n as f64, 0, c));
    }
    let terms = two_sided_terms(&plus_all, &minus_all);
    let lowest = terms.iter().map(|t| t.order).fold(0.0, f64::min);
    let core_rep = rep.clone();
    let core = Field::new(move |x: &[f64]| core_rep(x[0]).unwrap_or(f64::NAN));
    let rem = Field::new(move |x: &[f64]| {
        let mu = x[0];
        let r = mu.abs();
        if r >= PF_CUTOFF {
            return 0.0;
        }
        let side = if mu < 0.0 { &minus_all } else { &plus_all };
        rep(mu).unwrap_or(f64::NAN) - side_value(side, r)
    });
    let sym = SymbolExpansion::from_parts(1, PF_RADIUS, Some(core), terms, Some((rem, lowest - 2.0)), false)?;
    let v = partie_finie(&sym)?;
    if !v.is_finite() {
        return Err(Error::Inconsistent("trace representative could not be evaluated".into()));
    }
    Ok(v)
}

/// Regularized trace ⨍_R TR(A)(μ) dμ from the lattice-sum representative.
pub fn tr_bar(a: &ParamMultiplier) -> Result<f64> {
    if a.is_zero() {
        return Ok(0.0);
    }
    let tf = trace_function(a)?;
    let alpha = tf.alpha();
    pf_of_representative(a, alpha, Arc::new(move |mu| tf.value(mu)))
}

/// Σ_k 1/(k² + c²) = π coth(πc)/c.
pub fn inverse_square_lattice_sum(c: f64) -> f64 {
    PI / (c * (PI * c).tanh())
}

/// The same regularized trace with the representative taken from the closed
/// form π coth(πc)/c. Only multipliers Σ c_i (ξ² + μ² + κ_i)^{-1} qualify.
pub fn tr_bar_closed_form(a: &ParamMultiplier) -> Result<Option<f64>> {
    let Some(terms) = a.terms() else { return Ok(None) };
    if terms.iter().any(|t| t.s != -1.0 || t.mu_power != 0) {
        return Ok(None);
    }
    if terms.is_empty() {
        return Ok(Some(0.0));
    }
    let terms = terms.to_vec();
    let rep = move |mu: f64| -> Result<f64> {
        Ok(terms.iter().map(|t| t.coeff * inverse_square_lattice_sum((mu * mu + t.kappa).sqrt())).sum())
    };
    pf_of_representative(a, 0, Arc::new(rep)).map(Some)
}

/// The analytic trace expansion as a symbol on R (terms only, both sides).
pub fn trace_symbol(a: &ParamMultiplier) -> Result<SymbolExpansion> {
    let alpha = minimal_alpha(a.order());
    let err = || Error::Unsupported("analytic trace expansion of a closure multiplier".into());
    let mut plus = analytic_entries(a, 1.0).ok_or_else(err)?;
    let mut minus = analytic_entries(a, -1.0).ok_or_else(err)?;
    if alpha > 0 {
        (plus, minus) = drop_polynomials(&plus, &minus);
    }
    SymbolExpansion::from_parts(1, 1.0, None, two_sided_terms(&plus, &minus), None, false)
}

/// ⨍ TR(∂_μ A).
pub fn derived_trace(a: &ParamMultiplier) -> Result<f64> {
    tr_bar(&a.derivative())
}

/// The same quantity from the boundary formula applied to the expansion of TR(A).
pub fn derived_trace_from_expansion(a: &ParamMultiplier) -> Result<f64> {
    stokes_defect(&trace_symbol(a)?, 0)
}

/// res(TR(A)) with the (2π)^{-1} normalization.
pub fn res_of_tr(a: &ParamMultiplier) -> Result<f64> {
    residue_integral(&trace_symbol(a)?, Normalization::TwoPiPower)
}

/// Largest deviations in TR(∂A) = ∂TR(A) and TR(μA) = μTR(A), compared at
/// the derivative level where both sides are canonical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationDefects {
    pub derivative: f64,
    pub multiplication: f64,
}

pub fn commutation_defects(a: &ParamMultiplier, points: &[f64]) -> Result<CommutationDefects> {
    let tf = trace_function(a)?;
    let da = a.derivative();
    let tfd = trace_function(&da)?;
    let ma = a.mul_mu()?;
    let tfm = trace_function(&ma)?;
    let mut out = CommutationDefects { derivative: 0.0, multiplication: 0.0 };
    for &mu in points {
        let level = tfd.alpha().max(tf.alpha().saturating_sub(1));
        let lhs = tfd.derivative(mu, level)?;
        let rhs = tf.derivative(mu, level + 1)?;
        out.derivative = out.derivative.max((lhs - rhs).abs() / rhs.abs().max(1.0));

        let level = tfm.alpha().max(tf.alpha() + 1);
        let lhs = tfm.derivative(mu, level)?;
        // (μR)^{(L)} = μ R^{(L)} + L R^{(L−1)}
        let rhs = mu * tf.derivative(mu, level)? + level as f64 * tf.derivative(mu, level - 1)?;
        out.multiplication = out.multiplication.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    Ok(out)
}

/// Δ^{α+1} of the difference between the α- and (α+1)-representatives at
/// unit spacing from μ0; zero when they differ by a polynomial of degree ≤ α.
pub fn representative_defect(a: &ParamMultiplier, mu0: f64) -> Result<f64> {
    let t0 = trace_function(a)?;
    let t1 = TraceFunction::with_alpha(a, t0.alpha() + 1)?;
    let n = t0.alpha() + 1;
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut scale: f64 = 0.0;
    for i in 0..=n {
        let mu = mu0 + i as f64;
        let d = t1.value(mu)? - t0.value(mu)?;
        scale = scale.max(t1.value(mu)?.abs());
        let sign = if (n - i) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * d;
        binom *= (n - i) as f64 / (i as f64 + 1.0);
    }
    Ok(acc / scale.max(1.0))
}

/// Multipliers used by the acceptance suite and the CLI corpus.
pub fn shipped_family() -> Vec<(&'static str, ParamMultiplier)> {
    let b = |s: f64, kappa: f64, p: u32, c: f64| BracketTerm { coeff: c, mu_power: p, s, kappa };
    let m = |t: Vec<BracketTerm>| ParamMultiplier::from_terms(t).expect("valid bracket terms");
    vec![
        ("inverse-square", m(vec![b(-1.0, 1.0, 0, 1.0)])),
        ("sqrt", m(vec![b(0.5, 1.0, 0, 1.0)])),
        ("inverse-sqrt", m(vec![b(-0.5, 1.0, 0, 1.0)])),
        ("three-quarter", m(vec![b(-0.75, 2.0, 0, 1.0)])),
        ("mu-weighted", m(vec![b(-1.0, 1.0, 1, 1.0)])),
        ("mixed", m(vec![b(-1.0, 1.0, 0, 1.0), b(-1.5, 3.0, 2, 0.5)])),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let a = ParamMultiplier::bracket(-1.0, 1.0).unwrap();
        let tf = trace_function(&a).unwrap();
        assert_eq!(tf.alpha(), 0);
        assert!((tf.value(0.0).unwrap() - PI / PI.tanh()).abs() < 1e-12);
        let c = 2f64.sqrt();
        assert!((tf.value(1.0).unwrap() - inverse_square_lattice_sum(c)).abs() < 1e-12);
    }

    #[test]
    fn alpha_choice() {
        assert_eq!(minimal_alpha(-2.0), 0);
        assert_eq!(minimal_alpha(-1.0), 1);
        assert_eq!(minimal_alpha(1.0), 3);
        assert_eq!(minimal_alpha(-1.5), 0);
    }

    #[test]
    fn expansion_entries() {
        let a = ParamMultiplier::bracket(-1.0, 1.0).unwrap();
        let e = trace_expansion(&a).unwrap();
        assert!((e.get(-1.0, 0) - PI).abs() < 1e-14);
        assert!((e.get(-3.0, 0) + PI / 2.0).abs() < 1e-14);
        assert!(trace_expansion(&ParamMultiplier::zero()).unwrap().is_empty());
        let r = res_of_tr(&a).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_and_product_algebra() {
        let a = ParamMultiplier::bracket(0.5, 1.0).unwrap();
        let d = a.derivative();
        assert_eq!(d.order(), 0.0);
        let v = d.eval(2.0, 3.0).unwrap();
        assert!((v - 3.0 / 14f64.sqrt()).abs() < 1e-14);
        let b = ParamMultiplier::bracket(-1.0, 1.0).unwrap();
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        assert_eq!(ab.terms(), ba.terms());
    }
}
