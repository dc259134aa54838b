//! Sparse multivariate polynomials with real coefficients, used for angular
//! parts of homogeneous terms and for angular differential forms.

use std::collections::BTreeMap;
use std::fmt;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    write!(f, "·x{}^{}", i + 1, k)?;
                }
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, vec![0; dim], c)
    }

    pub fn monomial(dim: usize, exps: Vec<u32>, c: f64) -> Self {
        assert_eq!(exps.len(), dim, "monomial exponent length must equal dimension");
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(exps, c);
        }
        Self { dim, terms }
    }

    /// The coordinate function x_i.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(dim, e, 1.0)
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, f64)>>(dim: usize, it: I) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (e, c) in it {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.get(&e).copied().unwrap_or(0.0) + c;
        if v == 0.0 {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, v);
        }
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::zero(self.dim);
        }
        Poly { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = Poly::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (xi, k) in x.iter().zip(e) {
                m *= xi.powi(*k as i32);
            }
            acc += m;
        }
        acc
    }

    /// Partial derivative in coordinate `axis`.
    pub fn deriv(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut e2 = e.clone();
                e2[axis] -= 1;
                out.add_term(e2, c * e[axis] as f64);
            }
        }
        out
    }

    /// Splits into homogeneous components keyed by total degree.
    pub fn homogeneous_components(&self) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (e, c) in &self.terms {
            let d = e.iter().sum();
            out.entry(d).or_insert_with(|| Poly::zero(self.dim)).add_term(e.clone(), *c);
        }
        out
    }

    /// P(Mx) for a `dim × dim` row-major matrix M.
    pub fn linear_substitute(&self, m: &[f64]) -> Poly {
        let p = self.dim;
        assert_eq!(m.len(), p * p);
        let rows: Vec<Poly> = (0..p)
            .map(|i| {
                let mut r = Poly::zero(p);
                for j in 0..p {
                    r = r.add(&Poly::var(p, j).scale(m[i * p + j]));
                }
                r
            })
            .collect();
        let mut out = Poly::zero(p);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(p, *c);
            for (i, k) in e.iter().enumerate() {
                for _ in 0..*k {
                    t = t.mul(&rows[i]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Drops coefficients below `eps` in absolute value.
    pub fn pruned(&self, eps: f64) -> Poly {
        Poly {
            dim: self.dim,
            terms: self.terms.iter().filter(|(_, c)| c.abs() > eps).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    /// ∫_{S^{p-1}} P dvol using exact monomial moments. For p = 1 this is the
    /// two-point counting measure.
    pub fn sphere_integral(&self) -> f64 {
        let mut acc = crate::sum::Neumaier::new();
        for (e, c) in &self.terms {
            acc.add(c * sphere_moment(e));
        }
        acc.value()
    }
}

/// ∫_{S^{p-1}} ω^α dvol = 2 ∏Γ((α_i+1)/2) / Γ((|α|+p)/2), zero if any α_i is odd.
pub fn sphere_moment(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let p = alpha.len() as f64;
    let total: u32 = alpha.iter().sum();
    let mut lg = -ln_gamma((total as f64 + p) / 2.0);
    for a in alpha {
        lg += ln_gamma((*a as f64 + 1.0) / 2.0);
    }
    2.0 * lg.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::sphere_integrate;
    use std::f64::consts::PI;

    #[test]
    fn moments_on_circle() {
        assert!((Poly::constant(2, 1.0).sphere_integral() - 2.0 * PI).abs() < 1e-14);
        assert!((Poly::monomial(2, vec![2, 0], 1.0).sphere_integral() - PI).abs() < 1e-14);
        assert_eq!(Poly::var(1, 0).sphere_integral(), 0.0);
        assert_eq!(Poly::constant(1, 1.0).sphere_integral(), 2.0);
    }

    #[test]
    fn exact_moments_match_quadrature() {
        for p in 2..=3usize {
            let mut exps = vec![0u32; p];
            loop {
                if exps.iter().sum::<u32>() <= 8 {
                    let mono = Poly::monomial(p, exps.clone(), 1.0);
                    let q = sphere_integrate(&|w: &[f64]| Ok(mono.eval(w)), p, 1e-13).unwrap();
                    assert!((mono.sphere_integral() - q).abs() < 1e-12, "{exps:?}");
                }
                let mut i = 0;
                while i < p {
                    exps[i] += 1;
                    if exps[i] <= 8 {
                        break;
                    }
                    exps[i] = 0;
                    i += 1;
                }
                if i == p {
                    break;
                }
            }
        }
    }

    #[test]
    fn substitution_and_derivative() {
        // P = x^2 y, M swaps coordinates -> y^2 x
        let p = Poly::monomial(2, vec![2, 1], 3.0);
        let q = p.linear_substitute(&[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(q, Poly::monomial(2, vec![1, 2], 3.0));
        assert_eq!(p.deriv(0), Poly::monomial(2, vec![1, 1], 6.0));
        assert!(p.sub(&p).is_zero());
    }
}
