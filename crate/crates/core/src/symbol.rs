//! Polyhomogeneous symbols on R^p: a core on the ball of radius `radius`,
//! finitely many terms `b(ω) r^a log^l r` outside it, and a remainder.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{fmt_f64, snap};
use crate::poly::Poly;
use crate::quad;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PartialFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;
pub type BreakFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Remainders are built to be `O(r^{-p-8})` by the generators.
const DEPTH_MARGIN: f64 = 8.0;

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Central difference with one Richardson step.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], j: usize) -> f64 {
    let h = 1e-5 * norm(x).max(1.0);
    let d = |h: f64| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    };
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// A scalar function with an optional analytic gradient and optional radial
/// breakpoints (per direction) where it fails to be smooth.
#[derive(Clone)]
pub struct Field {
    f: ScalarFn,
    grad: Option<PartialFn>,
    breaks: Option<BreakFn>,
}

impl Field {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), grad: None, breaks: None }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0).with_grad(|_, _| 0.0)
    }

    pub fn with_grad(mut self, g: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_breaks(mut self, b: BreakFn) -> Self {
        self.breaks = Some(b);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn partial(&self, x: &[f64], j: usize) -> f64 {
        match &self.grad {
            Some(g) => g(x, j),
            None => fd_partial(&*self.f, x, j),
        }
    }

    pub fn derivative(&self, j: usize) -> Field {
        let this = self.clone();
        Field { f: Arc::new(move |x| this.partial(x, j)), grad: None, breaks: self.breaks.clone() }
    }

    /// Radial breakpoints of `r ↦ f(r ω)`.
    pub fn radial_breaks(&self, omega: &[f64]) -> Vec<f64> {
        self.breaks.as_ref().map(|b| b(omega)).unwrap_or_default()
    }
}

/// A function on the unit sphere S^{p-1}.
#[derive(Clone)]
pub enum AngularFunction {
    /// Restriction of a polynomial in ω₁..ω_p.
    Polynomial(Poly),
    /// Black-box callable; `smoothness` is the declared number of continuous
    /// derivatives, used only as a label for diagnostics.
    Tabulated { dim: usize, f: ScalarFn, smoothness: usize },
}

impl fmt::Debug for AngularFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngularFunction::Polynomial(p) => write!(f, "Polynomial({p:?})"),
            AngularFunction::Tabulated { dim, smoothness, .. } => {
                write!(f, "Tabulated(dim={dim}, smoothness={smoothness})")
            }
        }
    }
}

impl AngularFunction {
    pub fn constant(dim: usize, c: f64) -> Self {
        AngularFunction::Polynomial(Poly::constant(dim, c))
    }

    pub fn tabulated(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        AngularFunction::Tabulated { dim, f: Arc::new(f), smoothness: usize::MAX }
    }

    pub fn dim(&self) -> usize {
        match self {
            AngularFunction::Polynomial(p) => p.dim(),
            AngularFunction::Tabulated { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            AngularFunction::Polynomial(p) => p.eval(w),
            AngularFunction::Tabulated { f, .. } => f(w),
        }
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match self {
            AngularFunction::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AngularFunction::Polynomial(p) if p.is_zero())
    }

    /// ∫_{S^{p-1}} g: exact moments for polynomials, refined quadrature otherwise.
    pub fn sphere_integral(&self) -> Result<f64> {
        match self {
            AngularFunction::Polynomial(p) => Ok(p.sphere_integral()),
            AngularFunction::Tabulated { dim, f, .. } => quad::sphere_integrate(&|w: &[f64]| Ok(f(w)), *dim, 1e-13),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        match self {
            AngularFunction::Polynomial(p) => AngularFunction::Polynomial(p.scale(c)),
            AngularFunction::Tabulated { dim, f, smoothness } => {
                let f = f.clone();
                AngularFunction::Tabulated { dim: *dim, f: Arc::new(move |w| c * f(w)), smoothness: *smoothness }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (AngularFunction::Polynomial(a), AngularFunction::Polynomial(b)) => AngularFunction::Polynomial(a.add(b)),
            _ => {
                let (a, b) = (self.clone(), other.clone());
                let s = self.smoothness().min(other.smoothness());
                AngularFunction::Tabulated {
                    dim: self.dim(),
                    f: Arc::new(move |w| a.eval(w) + b.eval(w)),
                    smoothness: s,
                }
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (AngularFunction::Polynomial(a), AngularFunction::Polynomial(b)) => AngularFunction::Polynomial(a.mul(b)),
            _ => {
                let (a, b) = (self.clone(), other.clone());
                let s = self.smoothness().min(other.smoothness());
                AngularFunction::Tabulated {
                    dim: self.dim(),
                    f: Arc::new(move |w| a.eval(w) * b.eval(w)),
                    smoothness: s,
                }
            }
        }
    }

    fn smoothness(&self) -> usize {
        match self {
            AngularFunction::Polynomial(_) => usize::MAX,
            AngularFunction::Tabulated { smoothness, .. } => *smoothness,
        }
    }
}

/// `angular(ω) r^order log^logpow r`, valid for r at or beyond the symbol radius.
#[derive(Clone, Debug)]
pub struct HomTerm {
    pub order: f64,
    pub logpow: u32,
    pub angular: AngularFunction,
}

impl HomTerm {
    pub fn new(order: f64, logpow: u32, angular: AngularFunction) -> Self {
        Self { order: snap(order), logpow, angular }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let w: Vec<f64> = x.iter().map(|v| v / r).collect();
        self.angular.eval(&w) * r.powf(self.order) * r.ln().powi(self.logpow as i32)
    }

    /// ∂_j of the term as a list of terms of order `order - 1`.
    pub fn derivative(&self, j: usize) -> Result<Vec<HomTerm>> {
        let p = self.angular.as_poly().ok_or(Error::MissingDerivative)?;
        let dim = p.dim();
        let wj = Poly::var(dim, j);
        let a = self.order;
        let l = self.logpow;
        let mut same = Poly::zero(dim);
        let mut lower = Poly::zero(dim);
        // P = Σ_d P_d with P_d homogeneous: P_d(ω) = P_d(x) r^{-d}.
        for (d, pd) in p.homogeneous_components() {
            same = same.add(&pd.deriv(j)).add(&pd.mul(&wj).scale(a - d as f64));
            if l > 0 {
                lower = lower.add(&pd.mul(&wj).scale(l as f64));
            }
        }
        let mut out = Vec::new();
        if !same.is_zero() {
            out.push(HomTerm::new(a - 1.0, l, AngularFunction::Polynomial(same)));
        }
        if !lower.is_zero() {
            out.push(HomTerm::new(a - 1.0, l - 1, AngularFunction::Polynomial(lower)));
        }
        Ok(out)
    }

    /// ∂_j at x, analytic for polynomial angular parts.
    pub fn partial(&self, x: &[f64], j: usize) -> f64 {
        match self.derivative(j) {
            Ok(ds) => ds.iter().map(|d| d.eval(x)).sum(),
            Err(_) => fd_partial(&|y: &[f64]| self.eval(y), x, j),
        }
    }
}

fn terms_partial(terms: &[HomTerm], x: &[f64], j: usize) -> f64 {
    terms.iter().map(|t| t.partial(x, j)).sum()
}

/// Merges terms with equal (order, logpow), drops zero polynomial parts, and
/// sorts by decreasing order then decreasing log power.
pub fn merge_terms(terms: Vec<HomTerm>) -> Vec<HomTerm> {
    let mut out: Vec<HomTerm> = Vec::new();
    for t in terms {
        if t.angular.is_zero() {
            continue;
        }
        match out.iter_mut().find(|u| u.order == t.order && u.logpow == t.logpow) {
            Some(u) => u.angular = u.angular.add(&t.angular),
            None => out.push(t),
        }
    }
    out.retain(|t| !t.angular.is_zero());
    out.sort_by(|a, b| b.order.total_cmp(&a.order).then(b.logpow.cmp(&a.logpow)));
    out
}

/// A single layer `weight(ω) δ(|x| − radius)`, produced by differentiating a
/// symbol with a jump across the sphere of that radius.
#[derive(Clone, Debug)]
pub struct Layer {
    pub radius: f64,
    pub weight: AngularFunction,
}

/// Monomial `coefficient · x^exponents`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRecipe {
    pub weight: f64,
    pub symbol: Recipe,
}

/// Named closed-form generators from which symbols are built (and serialized).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Recipe {
    /// `(1 + |x|²)^power`.
    Japanese {
        dimension: usize,
        power: f64,
    },
    /// `exp(-|x|²)`.
    Gaussian {
        dimension: usize,
    },
    /// `χ(|x| ≥ 1) b(x/|x|) |x|^order log^logpow |x|`; `b = 1` when omitted.
    Cutoff {
        dimension: usize,
        order: f64,
        #[serde(default)]
        logpow: u32,
        #[serde(default)]
        angular: Option<Vec<MonomialSpec>>,
    },
    Polynomial {
        dimension: usize,
        polynomial: Vec<MonomialSpec>,
    },
    /// `½ log(1 + |x|²)`.
    LogJapanese {
        dimension: usize,
    },
    Linear {
        parts: Vec<WeightedRecipe>,
    },
    Product {
        factors: Vec<Recipe>,
    },
    /// `x ↦ f(A x)`, `matrix` given row by row.
    Scaled {
        inner: Box<Recipe>,
        matrix: Vec<Vec<f64>>,
    },
    Derivative {
        inner: Box<Recipe>,
        axis: usize,
    },
    Zero {
        dimension: usize,
    },
}

fn poly_from_specs(dim: usize, specs: &[MonomialSpec]) -> Result<Poly> {
    Poly::from_terms(dim, specs.iter().map(|m| (m.exponents.clone(), m.coefficient)))
}

fn specs_from_poly(p: &Poly) -> Vec<MonomialSpec> {
    p.terms().map(|(e, c)| MonomialSpec { exponents: e.clone(), coefficient: c }).collect()
}

impl Recipe {
    pub fn build(&self) -> Result<SymbolExpansion> {
        let check_dim = |d: usize| {
            if d == 0 || d > 3 {
                Err(Error::InvalidInput(format!("dimension {d} not supported (1..=3)")))
            } else {
                Ok(())
            }
        };
        let mut s = match self {
            Recipe::Japanese { dimension, power } => {
                check_dim(*dimension)?;
                SymbolExpansion::japanese(*dimension, *power)
            }
            Recipe::Gaussian { dimension } => {
                check_dim(*dimension)?;
                SymbolExpansion::gaussian(*dimension)
            }
            Recipe::Cutoff { dimension, order, logpow, angular } => {
                check_dim(*dimension)?;
                let b = match angular {
                    Some(specs) => poly_from_specs(*dimension, specs)?,
                    None => Poly::constant(*dimension, 1.0),
                };
                SymbolExpansion::cutoff(*order, *logpow, b)
            }
            Recipe::Polynomial { dimension, polynomial } => {
                check_dim(*dimension)?;
                SymbolExpansion::polynomial(poly_from_specs(*dimension, polynomial)?)
            }
            Recipe::LogJapanese { dimension } => {
                check_dim(*dimension)?;
                SymbolExpansion::log_japanese(*dimension)
            }
            Recipe::Linear { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidInput("empty linear combination".into()));
                }
                let built: Vec<(f64, SymbolExpansion)> =
                    parts.iter().map(|p| Ok((p.weight, p.symbol.build()?))).collect::<Result<_>>()?;
                let refs: Vec<(f64, &SymbolExpansion)> = built.iter().map(|(w, s)| (*w, s)).collect();
                SymbolExpansion::linear_combination(&refs)?
            }
            Recipe::Product { factors } => {
                let mut it = factors.iter();
                let first = it.next().ok_or_else(|| Error::InvalidInput("empty product".into()))?;
                let mut acc = first.build()?;
                for f in it {
                    acc = acc.multiply(&f.build()?)?;
                }
                acc
            }
            Recipe::Scaled { inner, matrix } => {
                let s = inner.build()?;
                let p = s.dim();
                if matrix.len() != p || matrix.iter().any(|r| r.len() != p) {
                    return Err(Error::DimensionMismatch { expected: p, got: matrix.len() });
                }
                let a = DMatrix::from_fn(p, p, |i, j| matrix[i][j]);
                s.scale_variable(&a)?
            }
            Recipe::Derivative { inner, axis } => inner.build()?.differentiate(*axis)?,
            Recipe::Zero { dimension } => {
                check_dim(*dimension)?;
                SymbolExpansion::zero(*dimension)
            }
        };
        s.recipe = Some(self.clone());
        Ok(s)
    }
}

/// Generalized binomial coefficient C(s, i).
pub fn binom(s: f64, i: usize) -> f64 {
    let mut c = 1.0;
    for t in 0..i {
        c *= (s - t as f64) / (t + 1) as f64;
    }
    c
}

#[derive(Clone)]
pub struct SymbolExpansion {
    dim: usize,
    order: f64,
    logdeg: u32,
    radius: f64,
    core: Field,
    core_zero: bool,
    terms: Vec<HomTerm>,
    remainder: Field,
    remainder_order: f64,
    remainder_zero: bool,
    jump: bool,
    inner_jump: bool,
    layers: Vec<Layer>,
    recipe: Option<Recipe>,
}

impl fmt::Debug for SymbolExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolExpansion")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("logdeg", &self.logdeg)
            .field("radius", &self.radius)
            .field("terms", &self.terms)
            .field("remainder_order", &self.remainder_order)
            .field("layers", &self.layers)
            .finish()
    }
}

impl SymbolExpansion {
    /// The zero symbol; its order is the −∞ sentinel.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            order: f64::NEG_INFINITY,
            logdeg: 0,
            radius: 1.0,
            core: Field::zero(),
            core_zero: true,
            terms: Vec::new(),
            remainder: Field::zero(),
            remainder_order: f64::NEG_INFINITY,
            remainder_zero: true,
            jump: false,
            inner_jump: false,
            layers: Vec::new(),
            recipe: Some(Recipe::Zero { dimension: dim }),
        }
    }

    /// Assembles a symbol from explicit parts. `remainder` must be the exact
    /// difference between the function and the listed terms for r ≥ radius.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim: usize,
        radius: f64,
        core: Option<Field>,
        terms: Vec<HomTerm>,
        remainder: Option<(Field, f64)>,
        jump: bool,
    ) -> Result<Self> {
        for t in &terms {
            if t.angular.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: t.angular.dim() });
            }
        }
        let terms = merge_terms(terms);
        let order = terms.first().map(|t| t.order).unwrap_or(f64::NEG_INFINITY);
        let logdeg = terms.iter().map(|t| t.logpow).max().unwrap_or(0);
        let (remainder, remainder_order, remainder_zero) = match remainder {
            Some((f, o)) => (f, o, false),
            None => (Field::zero(), f64::NEG_INFINITY, true),
        };
        if let Some(last) = terms.last() {
            if remainder_order >= last.order {
                return Err(Error::InvalidInput(format!(
                    "remainder order {remainder_order} must lie below the last term order {}",
                    last.order
                )));
            }
        }
        let order = if terms.is_empty() && !remainder_zero { remainder_order } else { order };
        Ok(Self {
            dim,
            order,
            logdeg,
            radius,
            core_zero: core.is_none(),
            core: core.unwrap_or_else(Field::zero),
            terms,
            remainder,
            remainder_order,
            remainder_zero,
            jump,
            inner_jump: false,
            layers: Vec::new(),
            recipe: None,
        })
    }

    /// `(1 + |x|²)^s` with its binomial expansion in `r^{-2}`.
    pub fn japanese(dim: usize, s: f64) -> Self {
        let p = dim as f64;
        let integer = s >= 0.0 && s.fract() == 0.0;
        let nterms = if integer {
            s as usize + 1
        } else {
            // smallest N with 2s - 2N ≤ -p - margin
            (((2.0 * s + p + DEPTH_MARGIN) / 2.0).ceil().max(0.0) as usize) + 1
        };
        let coeffs: Vec<f64> = (0..nterms).map(|i| binom(s, i)).collect();
        let terms: Vec<HomTerm> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| HomTerm::new(2.0 * s - 2.0 * i as f64, 0, AngularFunction::constant(dim, *c)))
            .collect();
        let core = Field::new(move |x| (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(s)).with_grad(move |x, j| {
            let q = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            2.0 * s * x[j] * q.powf(s - 1.0)
        });
        let remainder = if integer {
            None
        } else {
            let n = nterms;
            let c2 = coeffs.clone();
            let value = move |x: &[f64]| {
                let r2 = x.iter().map(|v| v * v).sum::<f64>();
                if r2 >= 4.0 {
                    // tail of the binomial series, summed directly
                    let u = 1.0 / r2;
                    let mut acc = 0.0;
                    let mut c = binom(s, n);
                    let mut upow = u.powi(n as i32);
                    for i in n..n + 400 {
                        let t = c * upow;
                        acc += t;
                        if t.abs() <= 1e-18 * acc.abs() {
                            break;
                        }
                        c *= (s - i as f64) / (i + 1) as f64;
                        upow *= u;
                    }
                    acc * r2.powf(s)
                } else {
                    let mut t = 0.0;
                    for (i, c) in c2.iter().enumerate() {
                        t += c * r2.powf(s - i as f64);
                    }
                    (1.0 + r2).powf(s) - t
                }
            };
            let c3 = coeffs.clone();
            let grad = move |x: &[f64], j: usize| {
                let r2 = x.iter().map(|v| v * v).sum::<f64>();
                if r2 >= 4.0 {
                    let u = 1.0 / r2;
                    let mut acc = 0.0;
                    let mut c = binom(s, n);
                    let mut upow = u.powi(n as i32);
                    for i in n..n + 400 {
                        // d/dx_j r^{2s-2i} = (2s-2i) r^{2s-2i-2} x_j
                        let t = c * upow * (2.0 * s - 2.0 * i as f64);
                        acc += t;
                        if t.abs() <= 1e-18 * acc.abs() {
                            break;
                        }
                        c *= (s - i as f64) / (i + 1) as f64;
                        upow *= u;
                    }
                    acc * r2.powf(s - 1.0) * x[j]
                } else {
                    let mut t = 0.0;
                    for (i, c) in c3.iter().enumerate() {
                        t += c * (2.0 * s - 2.0 * i as f64) * r2.powf(s - i as f64 - 1.0);
                    }
                    (2.0 * s * (1.0 + r2).powf(s - 1.0) - t) * x[j]
                }
            };
            Some((Field::new(value).with_grad(grad), 2.0 * s - 2.0 * n as f64))
        };
        let mut out = Self::from_parts(dim, 1.0, Some(core), terms, remainder, false).expect("valid japanese symbol");
        out.recipe = Some(Recipe::Japanese { dimension: dim, power: s });
        out
    }

    /// `exp(-|x|²)`: no homogeneous terms, rapidly decaying remainder.
    pub fn gaussian(dim: usize) -> Self {
        let f = |x: &[f64]| (-x.iter().map(|v| v * v).sum::<f64>()).exp();
        let g = move |x: &[f64], j: usize| -2.0 * x[j] * f(x);
        let field = Field::new(f).with_grad(g);
        let mut out =
            Self::from_parts(dim, 1.0, Some(field.clone()), Vec::new(), Some((field, f64::NEG_INFINITY)), false)
                .expect("valid gaussian");
        out.recipe = Some(Recipe::Gaussian { dimension: dim });
        out
    }

    /// `χ(|x| ≥ 1) b(ω) r^a log^l r` with exact terms and zero core.
    pub fn cutoff(a: f64, l: u32, b: Poly) -> Self {
        let dim = b.dim();
        let jump = l == 0 && !b.is_zero();
        let spec = specs_from_poly(&b);
        let mut out =
            Self::from_parts(dim, 1.0, None, vec![HomTerm::new(a, l, AngularFunction::Polynomial(b))], None, jump)
                .expect("valid cutoff");
        out.recipe = Some(Recipe::Cutoff { dimension: dim, order: a, logpow: l, angular: Some(spec) });
        out
    }

    /// A polynomial, split into homogeneous components outside the unit ball.
    pub fn polynomial(p: Poly) -> Self {
        let dim = p.dim();
        let terms = p
            .homogeneous_components()
            .into_iter()
            .map(|(d, pd)| HomTerm::new(d as f64, 0, AngularFunction::Polynomial(pd)))
            .collect();
        let (pc, pg) = (p.clone(), p.clone());
        let core = Field::new(move |x| pc.eval(x)).with_grad(move |x, j| pg.deriv(j).eval(x));
        let mut out = Self::from_parts(dim, 1.0, Some(core), terms, None, false).expect("valid polynomial");
        out.core_zero = p.is_zero();
        out.recipe = Some(Recipe::Polynomial { dimension: dim, polynomial: specs_from_poly(&p) });
        out
    }

    /// `½ log(1 + |x|²) = log r + Σ_{i≥1} (-1)^{i+1} r^{-2i} / (2i)`.
    pub fn log_japanese(dim: usize) -> Self {
        let p = dim as f64;
        let n = ((p + DEPTH_MARGIN) / 2.0).ceil() as usize;
        let mut terms = vec![HomTerm::new(0.0, 1, AngularFunction::constant(dim, 1.0))];
        for i in 1..=n {
            let c = if i % 2 == 1 { 1.0 } else { -1.0 } / (2 * i) as f64;
            terms.push(HomTerm::new(-2.0 * i as f64, 0, AngularFunction::constant(dim, c)));
        }
        let core = Field::new(|x| 0.5 * (x.iter().map(|v| v * v).sum::<f64>()).ln_1p())
            .with_grad(|x, j| x[j] / (1.0 + x.iter().map(|v| v * v).sum::<f64>()));
        let series = move |u: f64, start: usize, deriv: bool| {
            let mut acc = 0.0;
            for i in start..start + 400 {
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                let t = if deriv { sign * -u.powi(i as i32) } else { sign * u.powi(i as i32) / (2 * i) as f64 };
                acc += t;
                if t.abs() <= 1e-18 * acc.abs() {
                    break;
                }
            }
            acc
        };
        let value = move |x: &[f64]| {
            let r2 = x.iter().map(|v| v * v).sum::<f64>();
            if r2 >= 4.0 {
                series(1.0 / r2, n + 1, false)
            } else {
                let mut t = 0.5 * r2.ln();
                for i in 1..=n {
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    t += sign * r2.powi(-(i as i32)) / (2 * i) as f64;
                }
                0.5 * r2.ln_1p() - t
            }
        };
        let grad = move |x: &[f64], j: usize| {
            let r2 = x.iter().map(|v| v * v).sum::<f64>();
            if r2 >= 4.0 {
                // d/dx_j u^i/(2i) = -u^i x_j / r² · ... with u = r^{-2}: d u^i = -2i u^i x_j / r²
                series(1.0 / r2, n + 1, true) * x[j] / r2
            } else {
                let mut t = x[j] / r2;
                for i in 1..=n {
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    t -= sign * r2.powi(-(i as i32)) * x[j] / r2;
                }
                x[j] / (1.0 + r2) - t
            }
        };
        let rem_order = -2.0 * (n + 1) as f64;
        let mut out =
            Self::from_parts(dim, 1.0, Some(core), terms, Some((Field::new(value).with_grad(grad), rem_order)), false)
                .expect("valid log symbol");
        out.recipe = Some(Recipe::LogJapanese { dimension: dim });
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn order(&self) -> f64 {
        self.order
    }
    pub fn logdeg(&self) -> u32 {
        self.logdeg
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn terms(&self) -> &[HomTerm] {
        &self.terms
    }
    pub fn remainder_order(&self) -> f64 {
        self.remainder_order
    }
    pub fn remainder_is_zero(&self) -> bool {
        self.remainder_zero
    }
    pub fn core_is_zero(&self) -> bool {
        self.core_zero
    }
    pub fn core(&self) -> &Field {
        &self.core
    }
    pub fn remainder(&self) -> &Field {
        &self.remainder
    }
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }
    pub fn has_jump(&self) -> bool {
        self.jump
    }
    pub fn recipe(&self) -> Option<&Recipe> {
        self.recipe.as_ref()
    }
    pub fn is_zero(&self) -> bool {
        self.core_zero && self.terms.is_empty() && self.remainder_zero && self.layers.is_empty()
    }

    pub fn set_recipe(&mut self, r: Option<Recipe>) {
        self.recipe = r;
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Σ terms(x), for x outside the ball.
    pub fn terms_sum(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Terms plus remainder, the branch used for |x| > radius.
    pub fn outer(&self, x: &[f64]) -> f64 {
        self.terms_sum(x) + if self.remainder_zero { 0.0 } else { self.remainder.eval(x) }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        if norm(x) <= self.radius {
            if self.core_zero {
                0.0
            } else {
                self.core.eval(x)
            }
        } else {
            self.outer(x)
        }
    }

    /// ∂_j of the branch containing x (terms differentiated analytically when possible).
    pub fn partial_unchecked(&self, x: &[f64], j: usize) -> f64 {
        if norm(x) <= self.radius {
            if self.core_zero {
                0.0
            } else {
                self.core.partial(x, j)
            }
        } else {
            let r = if self.remainder_zero { 0.0 } else { self.remainder.partial(x, j) };
            r + terms_partial(&self.terms, x, j)
        }
    }

    /// Radial breakpoints of the eval function along ω, inside the ball.
    pub fn core_breaks(&self, omega: &[f64]) -> Vec<f64> {
        self.core.radial_breaks(omega)
    }

    /// Linear combination Σ w_i s_i.
    pub fn linear_combination(parts: &[(f64, &SymbolExpansion)]) -> Result<SymbolExpansion> {
        let dim = parts.first().ok_or_else(|| Error::InvalidInput("empty combination".into()))?.1.dim;
        for (_, s) in parts {
            if s.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.dim });
            }
        }
        let active: Vec<(f64, Arc<SymbolExpansion>)> = parts
            .iter()
            .filter(|(w, s)| *w != 0.0 && !s.is_zero())
            .map(|(w, s)| (*w, Arc::new((*s).clone())))
            .collect();
        if active.is_empty() {
            return Ok(SymbolExpansion::zero(dim));
        }
        let radius = active.iter().map(|(_, s)| s.radius).fold(0.0, f64::max);
        let rem_order = active.iter().map(|(_, s)| s.remainder_order).fold(f64::NEG_INFINITY, f64::max);
        let mut kept = Vec::new();
        let mut moved = Vec::new();
        for (w, s) in &active {
            for t in &s.terms {
                let t = HomTerm::new(t.order, t.logpow, t.angular.scale(*w));
                if t.order <= rem_order {
                    moved.push(t);
                } else {
                    kept.push(t);
                }
            }
        }
        let core_zero = active.iter().all(|(_, s)| s.core_zero && s.radius == radius);
        let core = {
            let parts = active.clone();
            let parts_g = active.clone();
            let mut f = Field::new(move |x| parts.iter().map(|(w, s)| w * s.eval_unchecked(x)).sum())
                .with_grad(move |x, j| parts_g.iter().map(|(w, s)| w * s.partial_unchecked(x, j)).sum());
            let breaks_parts = active.clone();
            f = f.with_breaks(Arc::new(move |w: &[f64]| {
                let mut b = Vec::new();
                for (_, s) in &breaks_parts {
                    b.extend(s.core_breaks(w));
                    if s.radius < radius {
                        b.push(s.radius);
                    }
                }
                b
            }));
            f
        };
        let remainder_zero = active.iter().all(|(_, s)| s.remainder_zero) && moved.is_empty();
        let remainder = if remainder_zero {
            None
        } else {
            let parts = active.clone();
            let parts_g = active.clone();
            let mv = moved.clone();
            let mv_g = moved.clone();
            let f = Field::new(move |x| {
                let mut acc: f64 = mv.iter().map(|t| t.eval(x)).sum();
                for (w, s) in &parts {
                    if !s.remainder_zero {
                        acc += w * s.remainder.eval(x);
                    }
                }
                acc
            })
            .with_grad(move |x, j| {
                let mut acc = terms_partial(&mv_g, x, j);
                for (w, s) in &parts_g {
                    if !s.remainder_zero {
                        acc += w * s.remainder.partial(x, j);
                    }
                }
                acc
            });
            Some((f, rem_order))
        };
        let jump = active.iter().any(|(_, s)| s.jump && s.radius == radius);
        let inner_jump = active.iter().any(|(_, s)| s.inner_jump || (s.jump && s.radius < radius));
        let mut out = Self::from_parts(dim, radius, if core_zero { None } else { Some(core) }, kept, remainder, jump)?;
        out.inner_jump = inner_jump;
        for (w, s) in &active {
            for l in &s.layers {
                out.layers.push(Layer { radius: l.radius, weight: l.weight.scale(*w) });
            }
        }
        let recipes: Option<Vec<WeightedRecipe>> =
            parts.iter().map(|(w, s)| s.recipe.clone().map(|r| WeightedRecipe { weight: *w, symbol: r })).collect();
        out.recipe = recipes.map(|parts| Recipe::Linear { parts });
        Ok(out)
    }

    /// Pointwise product; term lists are multiplied and truncated at the
    /// coarser remainder bound.
    pub fn multiply(&self, other: &SymbolExpansion) -> Result<SymbolExpansion> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let recipe = match (&self.recipe, &other.recipe) {
            (Some(a), Some(b)) => Some(Recipe::Product { factors: vec![a.clone(), b.clone()] }),
            _ => None,
        };
        if self.is_zero() || other.is_zero() {
            let mut z = SymbolExpansion::zero(self.dim);
            z.recipe = recipe;
            return Ok(z);
        }
        if !self.layers.is_empty() || !other.layers.is_empty() {
            return Err(Error::Unsupported("product of symbols carrying single layers".into()));
        }
        let (a, b) = (Arc::new(self.clone()), Arc::new(other.clone()));
        let radius = a.radius.max(b.radius);
        let ord = |s: &SymbolExpansion| s.terms.first().map(|t| t.order).unwrap_or(f64::NEG_INFINITY);
        let rem_order =
            [ord(&a) + b.remainder_order, ord(&b) + a.remainder_order, a.remainder_order + b.remainder_order]
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
        let mut kept = Vec::new();
        let mut moved = Vec::new();
        for ta in &a.terms {
            for tb in &b.terms {
                let t = HomTerm::new(ta.order + tb.order, ta.logpow + tb.logpow, ta.angular.mul(&tb.angular));
                if t.order <= rem_order {
                    moved.push(t);
                } else {
                    kept.push(t);
                }
            }
        }
        let core_zero = (a.core_zero && a.radius == radius) || (b.core_zero && b.radius == radius);
        let core = {
            let (a1, b1) = (a.clone(), b.clone());
            let (a2, b2) = (a.clone(), b.clone());
            let (a3, b3) = (a.clone(), b.clone());
            Field::new(move |x| a1.eval_unchecked(x) * b1.eval_unchecked(x))
                .with_grad(move |x, j| {
                    a2.partial_unchecked(x, j) * b2.eval_unchecked(x)
                        + a2.eval_unchecked(x) * b2.partial_unchecked(x, j)
                })
                .with_breaks(Arc::new(move |w: &[f64]| {
                    let mut v = a3.core_breaks(w);
                    v.extend(b3.core_breaks(w));
                    for s in [&a3, &b3] {
                        if s.radius < radius {
                            v.push(s.radius);
                        }
                    }
                    v
                }))
        };
        let remainder_zero = a.remainder_zero && b.remainder_zero && moved.is_empty();
        let remainder = if remainder_zero {
            None
        } else {
            let (a1, b1, mv) = (a.clone(), b.clone(), moved.clone());
            let value = move |x: &[f64]| {
                let at = a1.terms_sum(x);
                let bt = b1.terms_sum(x);
                let ar = if a1.remainder_zero { 0.0 } else { a1.remainder.eval(x) };
                let br = if b1.remainder_zero { 0.0 } else { b1.remainder.eval(x) };
                mv.iter().map(|t| t.eval(x)).sum::<f64>() + at * br + ar * bt + ar * br
            };
            let (a1, b1, mv) = (a.clone(), b.clone(), moved);
            let grad = move |x: &[f64], j: usize| {
                let (at, dat) = (a1.terms_sum(x), terms_partial(&a1.terms, x, j));
                let (bt, dbt) = (b1.terms_sum(x), terms_partial(&b1.terms, x, j));
                let (ar, dar) =
                    if a1.remainder_zero { (0.0, 0.0) } else { (a1.remainder.eval(x), a1.remainder.partial(x, j)) };
                let (br, dbr) =
                    if b1.remainder_zero { (0.0, 0.0) } else { (b1.remainder.eval(x), b1.remainder.partial(x, j)) };
                terms_partial(&mv, x, j) + dat * br + at * dbr + dar * bt + ar * dbt + dar * br + ar * dbr
            };
            Some((Field::new(value).with_grad(grad), rem_order))
        };
        let jump = (a.jump && a.radius == radius) || (b.jump && b.radius == radius);
        let inner_jump = a.inner_jump || b.inner_jump || (a.jump && a.radius < radius) || (b.jump && b.radius < radius);
        let mut out =
            Self::from_parts(self.dim, radius, if core_zero { None } else { Some(core) }, kept, remainder, jump)?;
        out.order = if a.order.is_finite() && b.order.is_finite() { a.order + b.order } else { out.order };
        out.logdeg = a.logdeg + b.logdeg;
        out.inner_jump = inner_jump;
        out.recipe = recipe;
        Ok(out)
    }

    /// ∂/∂x_j. A jump across the sphere |x| = radius becomes a single layer.
    pub fn differentiate(&self, j: usize) -> Result<SymbolExpansion> {
        if j >= self.dim {
            return Err(Error::InvalidInput(format!("axis {j} out of range for dimension {}", self.dim)));
        }
        let recipe = self.recipe.clone().map(|r| Recipe::Derivative { inner: Box::new(r), axis: j });
        if self.is_zero() {
            let mut z = SymbolExpansion::zero(self.dim);
            z.recipe = recipe;
            return Ok(z);
        }
        if !self.layers.is_empty() {
            return Err(Error::Unsupported("derivative of a single layer".into()));
        }
        if self.inner_jump {
            return Err(Error::Unsupported("derivative of a symbol with interior discontinuities".into()));
        }
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.extend(t.derivative(j)?);
        }
        let core = if self.core_zero { None } else { Some(self.core.derivative(j)) };
        let remainder =
            if self.remainder_zero { None } else { Some((self.remainder.derivative(j), self.remainder_order - 1.0)) };
        let mut out = Self::from_parts(self.dim, self.radius, core, terms, remainder, self.jump)?;
        out.order = self.order - 1.0;
        out.logdeg = self.logdeg;
        if self.jump {
            let rho = self.radius;
            let exact =
                self.core_zero && self.remainder_zero && self.terms.iter().all(|t| t.angular.as_poly().is_some());
            let weight = if exact {
                let mut w = Poly::zero(self.dim);
                for t in &self.terms {
                    let scale = rho.powf(t.order) * rho.ln().powi(t.logpow as i32);
                    w = w.add(&t.angular.as_poly().expect("checked").scale(scale));
                }
                AngularFunction::Polynomial(w.mul(&Poly::var(self.dim, j)))
            } else {
                let s = Arc::new(self.clone());
                AngularFunction::tabulated(self.dim, move |w| {
                    let x: Vec<f64> = w.iter().map(|v| v * rho).collect();
                    let inner = if s.core_zero { 0.0 } else { s.core.eval(&x) };
                    (s.outer(&x) - inner) * w[j]
                })
            };
            if !weight.is_zero() {
                out.layers.push(Layer { radius: rho, weight });
            }
        }
        out.recipe = recipe;
        Ok(out)
    }

    /// `x ↦ f(A x)` for invertible A.
    pub fn scale_variable(&self, a: &DMatrix<f64>) -> Result<SymbolExpansion> {
        let p = self.dim;
        if a.nrows() != p || a.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: a.nrows() });
        }
        let det = a.determinant();
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !(det.abs() > 1e-13 * scale.powi(p as i32)) {
            return Err(Error::SingularMatrix { det });
        }
        let recipe = self.recipe.clone().map(|r| Recipe::Scaled {
            inner: Box::new(r),
            matrix: (0..p).map(|i| (0..p).map(|j| a[(i, j)]).collect()).collect(),
        });
        if *a == DMatrix::identity(p, p) {
            let mut out = self.clone();
            out.recipe = recipe;
            return Ok(out);
        }
        if self.is_zero() {
            let mut z = SymbolExpansion::zero(p);
            z.recipe = recipe;
            return Ok(z);
        }
        if !self.layers.is_empty() {
            return Err(Error::Unsupported("change of variables for symbols carrying single layers".into()));
        }
        let ata = a.transpose() * a;
        let c2 = ata.trace() / p as f64;
        let conformal = (&ata - DMatrix::identity(p, p) * c2).iter().all(|v| v.abs() <= 1e-14 * c2);
        let am: Vec<f64> = (0..p * p).map(|k| a[(k / p, k % p)]).collect();
        let apply = move |am: &[f64], x: &[f64]| -> Vec<f64> {
            (0..p).map(|i| (0..p).map(|j| am[i * p + j] * x[j]).sum()).collect()
        };
        let src = Arc::new(self.clone());
        let mut terms = Vec::new();
        let new_radius;
        if conformal {
            let c = c2.sqrt();
            let q: Vec<f64> = am.iter().map(|v| v / c).collect();
            let lc = c.ln();
            for t in &src.terms {
                let b = match &t.angular {
                    AngularFunction::Polynomial(pb) => AngularFunction::Polynomial(pb.linear_substitute(&q)),
                    AngularFunction::Tabulated { f, smoothness, .. } => {
                        let (f, q) = (f.clone(), q.clone());
                        AngularFunction::Tabulated {
                            dim: p,
                            f: Arc::new(move |w| f(&apply(&q, w))),
                            smoothness: *smoothness,
                        }
                    }
                };
                let l = t.logpow;
                for m in 0..=l {
                    let k = binom(l as f64, m as usize) * lc.powi((l - m) as i32) * c.powf(t.order);
                    terms.push(HomTerm::new(t.order, m, b.scale(k)));
                }
            }
            new_radius = src.radius / c;
        } else {
            for t in &src.terms {
                let l = t.logpow;
                for m in 0..=l {
                    let (b, am, order) = (t.angular.clone(), am.clone(), t.order);
                    let k = binom(l as f64, m as usize);
                    let f = move |w: &[f64]| {
                        let aw = apply(&am, w);
                        let n = norm(&aw);
                        let u: Vec<f64> = aw.iter().map(|v| v / n).collect();
                        k * b.eval(&u) * n.powf(order) * n.ln().powi((l - m) as i32)
                    };
                    terms.push(HomTerm::new(t.order, m, AngularFunction::tabulated(p, f)));
                }
            }
            let inv = a.clone().try_inverse().ok_or(Error::SingularMatrix { det })?;
            let smax = inv.svd(false, false).singular_values.max();
            new_radius = src.radius * smax;
        }
        let core = if src.core_zero && conformal {
            None
        } else {
            let (s1, s2, s3) = (src.clone(), src.clone(), src.clone());
            let (am1, am2, am3) = (am.clone(), am.clone(), am.clone());
            Some(
                Field::new(move |x| s1.eval_unchecked(&apply(&am1, x)))
                    .with_grad(move |x, j| {
                        let y = apply(&am2, x);
                        (0..p).map(|i| s2.partial_unchecked(&y, i) * am2[i * p + j]).sum()
                    })
                    .with_breaks(Arc::new(move |w: &[f64]| {
                        let aw = apply(&am3, w);
                        let n = norm(&aw);
                        let u: Vec<f64> = aw.iter().map(|v| v / n).collect();
                        let mut b: Vec<f64> = s3.core_breaks(&u).into_iter().map(|r| r / n).collect();
                        b.push(s3.radius / n);
                        b
                    })),
            )
        };
        let remainder = if src.remainder_zero {
            None
        } else {
            let (s1, s2) = (src.clone(), src.clone());
            let (am1, am2) = (am.clone(), am.clone());
            let f = Field::new(move |x| s1.remainder.eval(&apply(&am1, x))).with_grad(move |x, j| {
                let y = apply(&am2, x);
                (0..p).map(|i| s2.remainder.partial(&y, i) * am2[i * p + j]).sum()
            });
            Some((f, src.remainder_order))
        };
        let mut out = Self::from_parts(p, new_radius, core, terms, remainder, src.jump && conformal)?;
        out.order = src.order;
        out.logdeg = src.logdeg;
        out.inner_jump = src.inner_jump || (src.jump && !conformal);
        out.recipe = recipe;
        Ok(out)
    }

    /// Serialized form: structural data plus the generator recipe that rebuilds it.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| {
                let angular = match &t.angular {
                    AngularFunction::Polynomial(p) => json!({
                        "kind": "polynomial",
                        "polynomial": p.terms().map(|(e, c)| json!({"exponents": e, "coefficient": fmt_f64(c)})).collect::<Vec<_>>(),
                    }),
                    AngularFunction::Tabulated { smoothness, .. } => json!({
                        "kind": "tabulated-callable",
                        "smoothness": if *smoothness == usize::MAX { Value::Null } else { json!(smoothness) },
                    }),
                };
                json!({"order": fmt_f64(t.order), "logpow": t.logpow, "angular": angular})
            })
            .collect();
        let recipe = self.recipe.as_ref().map(|r| serde_json::to_value(r).expect("recipe serializes"));
        json!({
            "dimension": self.dim,
            "order": fmt_f64(self.order),
            "logdeg": self.logdeg,
            "radius": fmt_f64(self.radius),
            "core": recipe.clone().unwrap_or(Value::Null),
            "terms": terms,
            "remainder": {"order": fmt_f64(self.remainder_order), "generator": recipe.unwrap_or(Value::Null)},
        })
    }

    /// Accepts either a bare generator recipe or a serialized expansion.
    pub fn from_json(v: &Value) -> Result<SymbolExpansion> {
        let recipe_value = if v.get("generator").is_some() {
            v
        } else {
            match v.get("core") {
                Some(c) if c.get("generator").is_some() => c,
                _ => return Err(Error::InvalidInput("symbol JSON has no generator recipe".into())),
            }
        };
        let recipe: Recipe = serde_json::from_value(recipe_value.clone())
            .map_err(|e| Error::InvalidInput(format!("malformed symbol recipe: {e}")))?;
        recipe.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn japanese_evaluation_and_branches() {
        let s = SymbolExpansion::japanese(1, -0.5);
        assert!(close(s.eval(&[2.0]).unwrap(), 0.447_213_595_499_958, 1e-14));
        // branches agree at the unit sphere
        assert!(close(s.outer(&[1.0]), s.core.eval(&[1.0]), 1e-14));
        assert!(close(s.outer(&[1.5]), (1.0f64 + 2.25).powf(-0.5), 1e-14));
        assert!(close(s.outer(&[7.0]), (50.0f64).powf(-0.5), 1e-14));
        assert!(s.remainder_order() < -9.0);
        assert_eq!(s.terms()[0].order, -1.0);
        assert_eq!(s.terms()[1].angular.as_poly().unwrap().eval(&[1.0]), -0.5);
    }

    #[test]
    fn trivial_evaluations() {
        assert_eq!(SymbolExpansion::zero(2).eval(&[0.3, 4.0]).unwrap(), 0.0);
        let s = SymbolExpansion::cutoff(-2.0, 0, Poly::constant(3, 1.0));
        assert!(close(s.eval(&[3.0, 0.0, 0.0]).unwrap(), 1.0 / 9.0, 1e-15));
        assert!(close(s.eval(&[0.0, 0.6, 2.92]).unwrap(), 1.0 / (0.36 + 2.92 * 2.92), 1e-14));
        assert!(matches!(s.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn derivative_of_odd_symbol_at_origin() {
        let x = SymbolExpansion::polynomial(Poly::var(1, 0));
        let f = x.multiply(&SymbolExpansion::japanese(1, -0.5)).unwrap();
        let df = f.differentiate(0).unwrap();
        assert!(close(df.eval(&[0.0]).unwrap(), 1.0, 1e-9));
        assert!(close(df.eval(&[3.0]).unwrap(), 10f64.powf(-1.5), 1e-9));
        assert_eq!(df.order(), f.order() - 1.0);
    }

    #[test]
    fn derivative_of_power_and_log_terms() {
        let s = SymbolExpansion::cutoff(-1.0, 0, Poly::constant(1, 1.0));
        let d = s.differentiate(0).unwrap();
        let t = &d.terms()[0];
        assert_eq!((t.order, t.logpow), (-2.0, 0));
        assert_eq!(t.angular.eval(&[1.0]), -1.0);
        assert_eq!(t.angular.eval(&[-1.0]), 1.0);
        let s = SymbolExpansion::cutoff(-1.0, 1, Poly::constant(1, 1.0));
        let d = s.differentiate(0).unwrap();
        let get = |l: u32| d.terms().iter().find(|t| t.logpow == l).unwrap().angular.eval(&[1.0]);
        assert_eq!(get(1), -1.0);
        assert_eq!(get(0), 1.0);
    }

    #[test]
    fn product_matches_direct_expansion() {
        let h = SymbolExpansion::japanese(1, -0.5);
        let sq = h.multiply(&h).unwrap();
        let direct = SymbolExpansion::japanese(1, -1.0);
        assert_eq!(sq.order(), -2.0);
        for (a, b) in sq.terms().iter().zip(direct.terms()) {
            assert_eq!(a.order, b.order);
            assert!(close(a.angular.eval(&[1.0]), b.angular.eval(&[1.0]), 1e-14));
        }
        for x in [0.3, 1.0, 1.7, 5.0, 40.0] {
            assert!(close(sq.eval(&[x]).unwrap(), 1.0 / (1.0 + x * x), 1e-13));
        }
        assert!(h.multiply(&SymbolExpansion::zero(1)).unwrap().is_zero());
    }

    #[test]
    fn scaling_in_one_dimension() {
        let h = SymbolExpansion::japanese(1, -0.5);
        let s = h.scale_variable(&DMatrix::from_element(1, 1, 3.0)).unwrap();
        let t = &s.terms()[0];
        assert!(close(t.angular.eval(&[1.0]), 1.0 / 3.0, 1e-15));
        let c = SymbolExpansion::cutoff(-1.0, 0, Poly::constant(1, 1.0));
        let s = c.scale_variable(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(s.radius(), 0.25);
        assert!(close(s.terms()[0].angular.eval(&[-1.0]), 0.25, 1e-15));
        assert!(matches!(c.scale_variable(&DMatrix::from_element(1, 1, 0.0)), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn recipe_json_round_trip() {
        let r = Recipe::Product {
            factors: vec![
                Recipe::Polynomial {
                    dimension: 1,
                    polynomial: vec![MonomialSpec { exponents: vec![1], coefficient: 1.0 }],
                },
                Recipe::Japanese { dimension: 1, power: -0.5 },
            ],
        };
        let s = r.build().unwrap();
        let j = s.to_json();
        let back = SymbolExpansion::from_json(&j).unwrap();
        assert_eq!(back.recipe(), Some(&r));
        assert_eq!(back.eval(&[2.5]).unwrap(), s.eval(&[2.5]).unwrap());
    }
}
