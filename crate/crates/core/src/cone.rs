//! Differential forms on cones [0,∞) × S^{n−1} whose radial coefficients lie
//! in a profile space, with integration along the fiber, the Thom section
//! and the homotopy operator K. Also res on forms with symbol coefficients.
//!
//! Forms on the sphere are ambient polynomial forms Σ P_I(ω) dω_I pulled
//! back to S^{n−1}; dr is always written last.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::regint::{residue_integral, Normalization};
use crate::symbol::SymbolExpansion;

const EXPONENT_EPS: f64 = 1e-12;

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < EXPONENT_EPS
}

/// Admissible profile spaces on [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileSpace {
    /// Classical symbols of order a. Partie finie for a ∉ Z, the residue
    /// coefficient f_{-1} for a ∈ {0, 1, 2, ...}.
    ClassicalOrder(f64),
    /// Rapidly decaying profiles with the ordinary integral.
    Schwartz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceType {
    /// The functional restricts to the integral on compact support.
    I,
    /// The functional vanishes on compact support; constants belong to the space.
    II,
}

impl ProfileSpace {
    pub fn classical(a: f64) -> Result<Self> {
        let s = ProfileSpace::ClassicalOrder(a);
        check_type(&s)?;
        Ok(s)
    }

    /// λ in "∮ restricted to compact support = λ ∫".
    pub fn lambda(&self) -> f64 {
        match check_type(self) {
            Ok(SpaceType::II) => 0.0,
            _ => 1.0,
        }
    }

    /// Checks that a profile belongs to the space.
    pub fn admits(&self, f: &Profile) -> Result<()> {
        let ty = check_type(self)?;
        let entries = f.expansion();
        let bad = |msg: String| Err(Error::InadmissibleProfile(msg));
        match self {
            ProfileSpace::Schwartz => {
                if let Some((e, l, _)) = entries.first() {
                    return bad(format!("term r^{e} log^{l} r does not decay rapidly"));
                }
            }
            ProfileSpace::ClassicalOrder(a) => {
                for (e, l, _) in &entries {
                    if *e > a + EXPONENT_EPS {
                        return bad(format!("term r^{e} exceeds order {a}"));
                    }
                    match ty {
                        SpaceType::II if *l > 0 || !is_integer(*e) => {
                            return bad(format!("term r^{e} log^{l} r is not classical of integer order"));
                        }
                        // a constant term would break closedness of the partie finie on A₀
                        SpaceType::I if *l == 0 && e.abs() < EXPONENT_EPS => {
                            return bad("constant term at infinity".into());
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// The regularized integral ∮ f over [0, ∞).
    pub fn integral(&self, f: &Profile) -> Result<f64> {
        let ty = check_type(self)?;
        let mut acc = 0.0;
        for (shape, c) in f.terms() {
            acc += c * match (ty, shape) {
                (SpaceType::I, Shape::Delta { .. }) => 1.0,
                (SpaceType::II, Shape::Delta { .. }) => 0.0,
                // pf ∫_{r0}^∞ s^e log^l s ds = −P(r0); P(R) has no constant term for e ≠ −1
                (SpaceType::I, Shape::Tail { e, l, r0 }) => -primitive_at(*e, *l, *r0),
                (SpaceType::II, Shape::Tail { e, l, .. }) => {
                    if (e + 1.0).abs() < EXPONENT_EPS && *l == 0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        Ok(acc)
    }
}

/// Type of a profile space; rejects classical order a ∈ {−1, −2, ...}, where
/// the antiderivative of an element need not stay in the space.
pub fn check_type(space: &ProfileSpace) -> Result<SpaceType> {
    match space {
        ProfileSpace::Schwartz => Ok(SpaceType::I),
        ProfileSpace::ClassicalOrder(a) => {
            if !a.is_finite() {
                Err(Error::InadmissibleProfile(format!("order {a}")))
            } else if !is_integer(*a) {
                Ok(SpaceType::I)
            } else if *a >= 0.0 {
                Ok(SpaceType::II)
            } else {
                Err(Error::InadmissibleProfile(format!(
                    "classical order {a}: antiderivatives acquire a constant term outside the space"
                )))
            }
        }
    }
}

/// Radial building blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// r^e log^l r for r ≥ r0, zero before.
    Tail { e: f64, l: u32, r0: f64 },
    /// Point mass at r0.
    Delta { r0: f64 },
}

impl Shape {
    fn key(&self) -> (u8, u64, u32, u64) {
        match *self {
            Shape::Tail { e, l, r0 } => (0, e.to_bits(), l, r0.to_bits()),
            Shape::Delta { r0 } => (1, 0, 0, r0.to_bits()),
        }
    }

    fn r0(&self) -> f64 {
        match *self {
            Shape::Tail { r0, .. } | Shape::Delta { r0 } => r0,
        }
    }

    /// Σ_j c_j shape_j for the distributional derivative.
    fn derivative(&self) -> Result<Vec<(Shape, f64)>> {
        match *self {
            Shape::Tail { e, l, r0 } => {
                let mut out = vec![(Shape::Delta { r0 }, r0.powf(e) * r0.ln().powi(l as i32))];
                if e != 0.0 {
                    out.push((Shape::Tail { e: e - 1.0, l, r0 }, e));
                }
                if l > 0 {
                    out.push((Shape::Tail { e: e - 1.0, l: l - 1, r0 }, l as f64));
                }
                Ok(out)
            }
            Shape::Delta { .. } => Err(Error::Unsupported("derivative of a point mass".into())),
        }
    }

    /// ∫_0^r as a combination of shapes.
    fn antiderivative(&self) -> Vec<(Shape, f64)> {
        match *self {
            Shape::Delta { r0 } => vec![(Shape::Tail { e: 0.0, l: 0, r0 }, 1.0)],
            Shape::Tail { e, l, r0 } => {
                let mut out: Vec<(Shape, f64)> = primitive_terms(e, l)
                    .into_iter()
                    .map(|(e2, l2, c)| (Shape::Tail { e: e2, l: l2, r0 }, c))
                    .collect();
                out.push((Shape::Tail { e: 0.0, l: 0, r0 }, -primitive_at(e, l, r0)));
                out
            }
        }
    }

    fn eval(&self, r: f64) -> f64 {
        match *self {
            Shape::Tail { e, l, r0 } if r >= r0 => r.powf(e) * r.ln().powi(l as i32),
            _ => 0.0,
        }
    }
}

/// A primitive of r^e log^l r as Σ c r^{e'} log^{l'} r, without constant.
fn primitive_terms(e: f64, l: u32) -> Vec<(f64, u32, f64)> {
    if (e + 1.0).abs() < EXPONENT_EPS {
        return vec![(0.0, l + 1, 1.0 / (l as f64 + 1.0))];
    }
    let a = e + 1.0;
    let mut out = Vec::with_capacity(l as usize + 1);
    let mut c = 1.0 / a;
    for i in 0..=l {
        out.push((a, l - i, c));
        c *= -((l - i) as f64) / a;
    }
    out
}

fn primitive_at(e: f64, l: u32, r: f64) -> f64 {
    primitive_terms(e, l).iter().map(|(a, k, c)| c * r.powf(*a) * r.ln().powi(*k as i32)).sum()
}

/// Finite combination of shapes; supported in (0, ∞) by construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    terms: Vec<(Shape, f64)>,
}

impl Profile {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<(Shape, f64)>) -> Result<Self> {
        for (s, c) in &terms {
            if !(s.r0() > 0.0) || !c.is_finite() {
                return Err(Error::InvalidInput(format!("profile pieces need r0 > 0 and finite weights: {s:?}")));
            }
            if let Shape::Tail { e, .. } = s {
                if !e.is_finite() {
                    return Err(Error::InvalidInput(format!("exponent {e}")));
                }
            }
        }
        let mut map: BTreeMap<(u8, u64, u32, u64), (Shape, f64)> = BTreeMap::new();
        for (s, c) in terms {
            map.entry(s.key()).or_insert((s, 0.0)).1 += c;
        }
        Ok(Self { terms: map.into_values().filter(|(_, c)| *c != 0.0).collect() })
    }

    /// c r^e for r ≥ r0.
    pub fn tail(c: f64, e: f64, r0: f64) -> Result<Self> {
        Self::from_terms(vec![(Shape::Tail { e, l: 0, r0 }, c)])
    }

    /// c on [a, b).
    pub fn window(c: f64, a: f64, b: f64) -> Result<Self> {
        Self::from_terms(vec![(Shape::Tail { e: 0.0, l: 0, r0: a }, c), (Shape::Tail { e: 0.0, l: 0, r0: b }, -c)])
    }

    pub fn terms(&self) -> &[(Shape, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Profile) -> Profile {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied().collect()).expect("valid pieces")
    }

    pub fn scale(&self, c: f64) -> Profile {
        Self::from_terms(self.terms.iter().map(|(s, w)| (*s, w * c)).collect()).expect("valid pieces")
    }

    pub fn derivative(&self) -> Result<Profile> {
        let mut out = Vec::new();
        for (s, c) in &self.terms {
            out.extend(s.derivative()?.into_iter().map(|(t, w)| (t, w * c)));
        }
        Self::from_terms(out)
    }

    pub fn antiderivative(&self) -> Profile {
        let out =
            self.terms.iter().flat_map(|(s, c)| s.antiderivative().into_iter().map(move |(t, w)| (t, w * c))).collect();
        Self::from_terms(out).expect("valid pieces")
    }

    /// Pointwise value; point masses are ignored.
    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|(s, c)| c * s.eval(r)).sum()
    }

    /// (exponent, logpow, coefficient) of the behaviour at infinity.
    pub fn expansion(&self) -> Vec<(f64, u32, f64)> {
        let mut map: BTreeMap<(u64, u32), (f64, u32, f64)> = BTreeMap::new();
        for (s, c) in &self.terms {
            if let Shape::Tail { e, l, .. } = s {
                map.entry((e.to_bits(), *l)).or_insert((*e, *l, 0.0)).2 += c;
            }
        }
        let scale = self.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
        map.into_values().filter(|t| t.2.abs() > 1e-14 * scale).collect()
    }
}

/// Bitmask of dω indices.
type Mask = u32;

fn merge_sign(i: Mask, j: Mask) -> f64 {
    // (−1)^{#pairs a ∈ i, b ∈ j with a > b}
    let mut count = 0;
    for b in 0..32 {
        if j & (1 << b) != 0 {
            count += (i >> (b + 1)).count_ones();
        }
    }
    if count % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Polynomial differential form Σ P_I(ω) dω_I on R^n, read on S^{n−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereForm {
    n: usize,
    terms: BTreeMap<(Vec<u32>, Mask), f64>,
}

impl SphereForm {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn monomial(n: usize, exps: Vec<u32>, mask: Mask, c: f64) -> Result<Self> {
        if exps.len() != n || mask >> n != 0 {
            return Err(Error::DimensionMismatch { expected: n, got: exps.len() });
        }
        let mut f = Self::zero(n);
        f.push(exps, mask, c);
        Ok(f)
    }

    pub fn function(p: &Poly) -> Self {
        let mut f = Self::zero(p.dim());
        for (e, c) in p.terms() {
            f.push(e.clone(), 0, c);
        }
        f
    }

    pub fn one(n: usize) -> Self {
        Self::function(&Poly::constant(n, 1.0))
    }

    /// dθ = −ω₂ dω₁ + ω₁ dω₂ on S¹.
    pub fn dtheta() -> Self {
        let mut f = Self::zero(2);
        f.push(vec![0, 1], 0b01, -1.0);
        f.push(vec![1, 0], 0b10, 1.0);
        f
    }

    /// Area form ω₁ dω₂∧dω₃ − ω₂ dω₁∧dω₃ + ω₃ dω₁∧dω₂ on S².
    pub fn area_s2() -> Self {
        let mut f = Self::zero(3);
        f.push(vec![1, 0, 0], 0b110, 1.0);
        f.push(vec![0, 1, 0], 0b101, -1.0);
        f.push(vec![0, 0, 1], 0b011, 1.0);
        f
    }

    fn push(&mut self, exps: Vec<u32>, mask: Mask, c: f64) {
        if c == 0.0 {
            return;
        }
        let key = (exps, mask);
        let v = self.terms.get(&key).copied().unwrap_or(0.0) + c;
        if v == 0.0 {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, v);
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.terms.keys().map(|(_, m)| m.count_ones()).collect();
        d.sort();
        d.dedup();
        d
    }

    pub fn component(&self, k: u32) -> SphereForm {
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|((_, m), _)| m.count_ones() == k).map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    pub fn add(&self, other: &SphereForm) -> SphereForm {
        let mut out = self.clone();
        for ((e, m), c) in &other.terms {
            out.push(e.clone(), *m, *c);
        }
        out
    }

    pub fn scale(&self, c: f64) -> SphereForm {
        if c == 0.0 {
            return Self::zero(self.n);
        }
        Self { n: self.n, terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn wedge(&self, other: &SphereForm) -> SphereForm {
        let mut out = Self::zero(self.n);
        for ((e1, m1), c1) in &self.terms {
            for ((e2, m2), c2) in &other.terms {
                if m1 & m2 != 0 {
                    continue;
                }
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.push(e, m1 | m2, c1 * c2 * merge_sign(*m1, *m2));
            }
        }
        out
    }

    /// Exterior derivative in the ambient space; it commutes with pullback.
    pub fn d(&self) -> SphereForm {
        let mut out = Self::zero(self.n);
        for ((e, m), c) in &self.terms {
            for j in 0..self.n {
                if e[j] == 0 || m & (1 << j) != 0 {
                    continue;
                }
                let mut e2 = e.clone();
                e2[j] -= 1;
                out.push(e2, m | (1 << j), c * e[j] as f64 * merge_sign(1 << j, *m));
            }
        }
        out
    }

    /// Value on tangent vectors `vs` at the point `w`.
    pub fn eval_on(&self, w: &[f64], vs: &[Vec<f64>]) -> f64 {
        let k = vs.len() as u32;
        let mut acc = 0.0;
        for ((e, m), c) in &self.terms {
            if m.count_ones() != k {
                continue;
            }
            let idx: Vec<usize> = (0..self.n).filter(|i| m & (1 << i) != 0).collect();
            let mut mat = nalgebra::DMatrix::zeros(idx.len(), idx.len());
            for (a, v) in vs.iter().enumerate() {
                for (b, i) in idx.iter().enumerate() {
                    mat[(a, b)] = v[*i];
                }
            }
            let det = if idx.is_empty() { 1.0 } else { mat.determinant() };
            let mono: f64 = e.iter().zip(w).map(|(p, x)| x.powi(*p as i32)).product();
            acc += c * mono * det;
        }
        acc
    }

    /// Values on all subsets of an orthonormal tangent frame at `w`, grouped
    /// by degree. Two forms agree on the sphere iff these agree everywhere.
    pub fn frame_values(&self, w: &[f64]) -> Vec<f64> {
        let frame = tangent_frame(w);
        let m = frame.len();
        let mut out = Vec::with_capacity(1 << m);
        for subset in 0..(1u32 << m) {
            let vs: Vec<Vec<f64>> = (0..m).filter(|i| subset & (1 << i) != 0).map(|i| frame[i].clone()).collect();
            out.push(self.eval_on(w, &vs));
        }
        out
    }

    /// Largest coefficient difference.
    pub fn max_coefficient_difference(&self, other: &SphereForm) -> f64 {
        self.add(&other.scale(-1.0)).terms.values().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Orthonormal basis of the tangent space of S^{n−1} at w (n = 2, 3).
pub fn tangent_frame(w: &[f64]) -> Vec<Vec<f64>> {
    match w.len() {
        2 => vec![vec![-w[1], w[0]]],
        3 => {
            let pick = if w[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dot = pick[0] * w[0] + pick[1] * w[1] + pick[2] * w[2];
            let mut a: Vec<f64> = (0..3).map(|i| pick[i] - dot * w[i]).collect();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            a.iter_mut().for_each(|x| *x /= na);
            let b = vec![w[1] * a[2] - w[2] * a[1], w[2] * a[0] - w[0] * a[2], w[0] * a[1] - w[1] * a[0]];
            vec![a, b]
        }
        n => vec![vec![0.0; n]; n.saturating_sub(1)],
    }
}

/// One generator shape(r) · π*η (∧ dr).
#[derive(Debug, Clone, PartialEq)]
pub struct ConeTerm {
    pub shape: Shape,
    pub eta: SphereForm,
    pub dr: bool,
}

/// Σ f_i(r) π*η_i + Σ g_j(r) π*η_j ∧ dr on [0,∞) × S^{n−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeForm {
    n: usize,
    terms: Vec<ConeTerm>,
}

impl ConeForm {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// f(r) π*η, with `dr` appending ∧ dr.
    pub fn generator(f: &Profile, eta: &SphereForm, dr: bool) -> Result<Self> {
        let n = eta.ambient_dim();
        if !(2..=3).contains(&n) {
            return Err(Error::Unsupported(format!("cones over S^{} (only S¹ and S²)", n - 1)));
        }
        let terms = f.terms().iter().map(|(s, c)| ConeTerm { shape: *s, eta: eta.scale(*c), dr }).collect();
        Ok(Self::normalized(n, terms))
    }

    fn normalized(n: usize, terms: Vec<ConeTerm>) -> Self {
        let mut map: BTreeMap<((u8, u64, u32, u64), bool), ConeTerm> = BTreeMap::new();
        for t in terms {
            map.entry((t.shape.key(), t.dr)).and_modify(|x| x.eta = x.eta.add(&t.eta)).or_insert(t);
        }
        Self { n, terms: map.into_values().filter(|t| !t.eta.is_zero()).collect() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[ConeTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &ConeForm) -> ConeForm {
        Self::normalized(self.n, self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn scale(&self, c: f64) -> ConeForm {
        Self::normalized(self.n, self.terms.iter().map(|t| ConeTerm { eta: t.eta.scale(c), ..t.clone() }).collect())
    }

    /// Form degrees present (dr counts one).
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> =
            self.terms.iter().flat_map(|t| t.eta.degrees().into_iter().map(move |k| k + t.dr as u32)).collect();
        d.sort();
        d.dedup();
        d
    }

    /// Radial profile of the dr-free (false) or dr (true) part along η.
    pub fn profile_of(&self, dr: bool) -> Vec<(Shape, SphereForm)> {
        self.terms.iter().filter(|t| t.dr == dr).map(|t| (t.shape, t.eta.clone())).collect()
    }

    /// The exterior derivative.
    pub fn d(&self) -> Result<ConeForm> {
        let mut out = Vec::new();
        for t in &self.terms {
            out.push(ConeTerm { shape: t.shape, eta: t.eta.d(), dr: t.dr });
            if !t.dr {
                for k in t.eta.degrees() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let part = t.eta.component(k);
                    for (s, c) in t.shape.derivative()? {
                        out.push(ConeTerm { shape: s, eta: part.scale(sign * c), dr: true });
                    }
                }
            }
        }
        Ok(Self::normalized(self.n, out))
    }

    /// Coefficient forms (dr-free part, dr part) at radius r, point masses ignored.
    pub fn at_radius(&self, r: f64) -> (SphereForm, SphereForm) {
        let mut a = SphereForm::zero(self.n);
        let mut b = SphereForm::zero(self.n);
        for t in &self.terms {
            let v = t.shape.eval(r);
            if v == 0.0 {
                continue;
            }
            if t.dr {
                b = b.add(&t.eta.scale(v));
            } else {
                a = a.add(&t.eta.scale(v));
            }
        }
        (a, b)
    }

    /// Point-mass parts, merged per location.
    pub fn singular_part(&self) -> Vec<(f64, bool, SphereForm)> {
        let mut map: BTreeMap<(u64, bool), (f64, bool, SphereForm)> = BTreeMap::new();
        for t in &self.terms {
            if let Shape::Delta { r0 } = t.shape {
                map.entry((r0.to_bits(), t.dr)).and_modify(|x| x.2 = x.2.add(&t.eta)).or_insert((
                    r0,
                    t.dr,
                    t.eta.clone(),
                ));
            }
        }
        map.into_values().collect()
    }

    /// Total degrees (radial exponent + 1 for dr) of the power-law pieces.
    pub fn total_degrees(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .terms
            .iter()
            .filter_map(|t| match t.shape {
                Shape::Tail { e, .. } => Some(e + t.dr as u32 as f64),
                Shape::Delta { .. } => None,
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < EXPONENT_EPS);
        v
    }

    fn check_space(&self, space: &ProfileSpace) -> Result<()> {
        // group coefficients per angular monomial so cancellations count
        let mut per_key: BTreeMap<(Vec<u32>, Mask, bool), Vec<(Shape, f64)>> = BTreeMap::new();
        for t in &self.terms {
            for ((e, m), c) in &t.eta.terms {
                per_key.entry((e.clone(), *m, t.dr)).or_default().push((t.shape, *c));
            }
        }
        for pieces in per_key.into_values() {
            space.admits(&Profile::from_terms(pieces)?)?;
        }
        Ok(())
    }
}

/// π_*: ∮ of the dr coefficients.
pub fn fiber_integrate(w: &ConeForm, space: &ProfileSpace) -> Result<SphereForm> {
    w.check_space(space)?;
    let mut out = SphereForm::zero(w.n);
    for t in w.terms.iter().filter(|t| t.dr) {
        let v = space.integral(&Profile::from_terms(vec![(t.shape, 1.0)])?)?;
        out = out.add(&t.eta.scale(v));
    }
    Ok(out)
}

/// s_*η = φ(r) π*η ∧ dr.
pub fn thom_section(eta: &SphereForm, phi: &Profile, space: &ProfileSpace) -> Result<ConeForm> {
    space.admits(phi)?;
    let total = space.integral(phi)?;
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("Thom profile has ∮φ = {total}, need 1")));
    }
    ConeForm::generator(phi, eta, true)
}

/// Kω = (−1)^{k−1} [∫_0^r (f₂ − (∮f₂) φ)] π*η₂ on the dr part of ω.
pub fn homotopy_k(w: &ConeForm, phi: &Profile, space: &ProfileSpace) -> Result<ConeForm> {
    w.check_space(space)?;
    let mut out = Vec::new();
    for t in w.terms.iter().filter(|t| t.dr) {
        let f = Profile::from_terms(vec![(t.shape, 1.0)])?;
        let integrand = f.add(&phi.scale(-space.integral(&f)?));
        let primitive = integrand.antiderivative();
        for k in t.eta.degrees() {
            // ω has degree k + 1, so (−1)^{k−1} becomes (−1)^k
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let part = t.eta.component(k);
            for (s, c) in primitive.terms() {
                out.push(ConeTerm { shape: *s, eta: part.scale(sign * c), dr: false });
            }
        }
    }
    Ok(ConeForm::normalized(w.n, out))
}

/// Pointwise defect of dK + Kd = id − s_*π_* at (r, ω), maximum over the
/// frame values of both components, plus the point-mass mismatch.
pub fn homotopy_defect(w: &ConeForm, phi: &Profile, space: &ProfileSpace, samples: &[(f64, Vec<f64>)]) -> Result<f64> {
    let k = homotopy_k(w, phi, space)?;
    let lhs = k.d()?.add(&homotopy_k(&w.d()?, phi, space)?);
    let rhs = w.add(&thom_section(&fiber_integrate(w, space)?, phi, space)?.scale(-1.0));
    let diff = lhs.add(&rhs.scale(-1.0));
    let mut worst: f64 = 0.0;
    for (r, p) in samples {
        let (a, b) = diff.at_radius(*r);
        let (ra, rb) = rhs.at_radius(*r);
        let scale = ra.frame_values(p).into_iter().chain(rb.frame_values(p)).fold(1.0, |m: f64, v| m.max(v.abs()));
        for v in a.frame_values(p).into_iter().chain(b.frame_values(p)) {
            worst = worst.max(v.abs() / scale);
        }
    }
    for (_, _, eta) in diff.singular_part() {
        let c = eta.terms.values().fold(0.0, |m: f64, v| m.max(v.abs()));
        worst = worst.max(c);
    }
    Ok(worst)
}

/// A form Σ f_I dξ_I on R^p with symbol coefficients.
#[derive(Clone)]
pub struct SymbolForm {
    dim: usize,
    components: Vec<(Mask, SymbolExpansion)>,
}

impl SymbolForm {
    pub fn new(dim: usize, components: Vec<(Mask, SymbolExpansion)>) -> Result<Self> {
        for (m, f) in &components {
            if f.dim() != dim || m >> dim != 0 {
                return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
            }
        }
        Ok(Self { dim, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[(Mask, SymbolExpansion)] {
        &self.components
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.components.iter().map(|(m, _)| m.count_ones()).collect();
        d.sort();
        d.dedup();
        d
    }

    pub fn d(&self) -> Result<SymbolForm> {
        let mut out: BTreeMap<Mask, Vec<(f64, SymbolExpansion)>> = BTreeMap::new();
        for (m, f) in &self.components {
            for j in 0..self.dim {
                if m & (1 << j) != 0 {
                    continue;
                }
                out.entry(m | (1 << j)).or_default().push((merge_sign(1 << j, *m), f.differentiate(j)?));
            }
        }
        let mut components = Vec::new();
        for (m, parts) in out {
            let refs: Vec<(f64, &SymbolExpansion)> = parts.iter().map(|(c, s)| (*c, s)).collect();
            components.push((m, SymbolExpansion::linear_combination(&refs)?));
        }
        Ok(SymbolForm { dim: self.dim, components })
    }
}

/// res on forms: (2π)^{-p} ∫_{S^{p−1}} f_{−p,0} for the top-degree part; lower
/// degrees contribute 0.
pub fn res_form(s: &SymbolForm) -> Result<f64> {
    let top: Mask = (1 << s.dim) - 1;
    let mut acc = 0.0;
    for (m, f) in &s.components {
        if *m == top {
            acc += residue_integral(f, Normalization::TwoPiPower)?;
        }
    }
    Ok(acc)
}

/// res(dσ), which vanishes for log-free classical coefficients.
pub fn stokes_property_check(s: &SymbolForm) -> Result<f64> {
    res_form(&s.d()?)
}

/// A corpus cone form with its profile space and Thom profile.
#[derive(Debug, Clone)]
pub struct CorpusForm {
    pub name: &'static str,
    pub form: ConeForm,
    pub space: ProfileSpace,
    pub phi: Profile,
}

fn tails(pieces: &[(f64, f64, u32, f64)]) -> Profile {
    Profile::from_terms(pieces.iter().map(|&(c, e, l, r0)| (Shape::Tail { e, l, r0 }, c)).collect())
        .expect("valid pieces")
}

fn mono(n: usize, exps: &[u32], mask: Mask) -> SphereForm {
    SphereForm::monomial(n, exps.to_vec(), mask, 1.0).expect("valid monomial")
}

/// Forms over S¹ and S² in the three kinds of profile space.
pub fn corpus() -> Vec<CorpusForm> {
    let gen = |f: Profile, eta: SphereForm, dr: bool| ConeForm::generator(&f, &eta, dr).expect("valid generator");
    let type1 = ProfileSpace::ClassicalOrder(-0.5);
    let type2 = ProfileSpace::ClassicalOrder(0.0);
    let phi1 = tails(&[(1.0, -2.0, 0, 1.0)]);
    let phi2 = tails(&[(1.0, -1.0, 0, 1.0)]);
    let phis = Profile::window(1.0, 1.0, 2.0).expect("valid window");
    let one2 = SphereForm::one(2);
    let one3 = SphereForm::one(3);
    let item = |name, form, space, phi: &Profile| CorpusForm { name, form, space, phi: phi.clone() };
    vec![
        item("inverse-square-dr", gen(tails(&[(1.0, -2.0, 0, 1.0)]), one2.clone(), true), type1, &phi1),
        item(
            "two-powers-dr",
            gen(tails(&[(1.0, -2.0, 0, 1.0), (1.0, -3.0, 0, 1.0)]), one2.clone(), true),
            type1,
            &phi1,
        ),
        item(
            "half-power-dtheta",
            gen(tails(&[(1.0, -0.5, 0, 1.5)]), mono(2, &[1, 0], 0).wedge(&SphereForm::dtheta()), false),
            type1,
            &phi1,
        ),
        item(
            "function-and-dr-s1",
            gen(tails(&[(1.0, -1.5, 0, 0.75)]), mono(2, &[1, 1], 0), false).add(&gen(
                tails(&[(2.0, -2.5, 0, 1.25)]),
                SphereForm::dtheta(),
                true,
            )),
            type1,
            &phi1,
        ),
        item(
            "mixed-s2",
            gen(tails(&[(1.0, -2.5, 0, 1.0)]), mono(3, &[0, 0, 1], 0b001).add(&mono(3, &[2, 0, 0], 0b010)), true)
                .add(&gen(tails(&[(1.0, -1.0, 0, 2.0)]), mono(3, &[0, 1, 0], 0b101), false)),
            type1,
            &phi1,
        ),
        item("log-s2", gen(tails(&[(1.0, -2.0, 1, 1.0)]), mono(3, &[1, 0, 0], 0b010), true), type1, &phi1),
        item("area-s2", gen(tails(&[(1.0, -1.5, 0, 1.0)]), SphereForm::area_s2(), true), type1, &phi1),
        item("residue-dr", gen(tails(&[(1.0, -1.0, 0, 1.0)]), one2.clone(), true), type2, &phi2),
        item(
            "constant-profile-s1",
            gen(tails(&[(1.0, 0.0, 0, 1.0), (1.0, -1.0, 0, 1.0)]), mono(2, &[1, 0], 0), false).add(&gen(
                tails(&[(1.0, -1.0, 0, 2.0), (3.0, -2.0, 0, 2.0)]),
                mono(2, &[0, 1], 0).wedge(&SphereForm::dtheta()),
                true,
            )),
            type2,
            &phi2,
        ),
        item(
            "residue-s2",
            gen(tails(&[(1.0, 0.0, 0, 1.0), (2.0, -1.0, 0, 1.0)]), mono(3, &[0, 0, 1], 0b001), true),
            type2,
            &phi2,
        ),
        item(
            "windows-s1",
            gen(Profile::window(1.0, 0.5, 1.5).expect("valid window"), mono(2, &[1, 0], 0), true).add(&gen(
                Profile::window(2.0, 2.0, 2.5).expect("valid window"),
                SphereForm::dtheta(),
                false,
            )),
            ProfileSpace::Schwartz,
            &phis,
        ),
        item("scalar-s2", gen(tails(&[(1.0, -0.5, 0, 1.0)]), one3, false), type1, &phi1),
    ]
}

/// Forms with classical polynomial-angular coefficients for the check res(dσ) = 0.
pub fn symbol_form_corpus() -> Vec<(&'static str, SymbolForm)> {
    let form = |dim, comps: Vec<(Mask, SymbolExpansion)>| SymbolForm::new(dim, comps).expect("valid form");
    vec![
        ("xi1-over-r2-dxi2", form(2, vec![(0b10, SymbolExpansion::cutoff(-1.0, 0, Poly::var(2, 0)))])),
        (
            "japanese-and-cutoff",
            form(
                2,
                vec![
                    (0b01, SymbolExpansion::japanese(2, -0.5)),
                    (0b10, SymbolExpansion::cutoff(-1.0, 0, Poly::monomial(2, vec![1, 2], 1.0))),
                ],
            ),
        ),
        ("polynomial", form(2, vec![(0b01, SymbolExpansion::polynomial(Poly::monomial(2, vec![2, 1], 1.0)))])),
        ("gaussian", form(2, vec![(0b10, SymbolExpansion::gaussian(2))])),
        ("function-on-line", form(1, vec![(0, SymbolExpansion::japanese(1, 0.5))])),
        ("three-dim", form(3, vec![(0b110, SymbolExpansion::cutoff(-2.0, 0, Poly::var(3, 0)))])),
        ("top-degree", form(2, vec![(0b11, SymbolExpansion::cutoff(-2.0, 0, Poly::constant(2, 1.0)))])),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn types() {
        assert_eq!(check_type(&ProfileSpace::ClassicalOrder(0.5)).unwrap(), SpaceType::I);
        assert_eq!(check_type(&ProfileSpace::ClassicalOrder(0.0)).unwrap(), SpaceType::II);
        assert_eq!(check_type(&ProfileSpace::Schwartz).unwrap(), SpaceType::I);
        assert!(matches!(check_type(&ProfileSpace::ClassicalOrder(-2.0)), Err(Error::InadmissibleProfile(_))));
    }

    #[test]
    fn primitive_and_pf() {
        let f = Profile::tail(1.0, -2.0, 1.0).unwrap();
        assert_eq!(ProfileSpace::ClassicalOrder(-0.5).integral(&f).unwrap(), 1.0);
        let g = f.antiderivative();
        assert!((g.eval(2.0) - 0.5).abs() < 1e-15);
        assert_eq!(g.eval(0.5), 0.0);
        let l = Profile::from_terms(vec![(Shape::Tail { e: -1.0, l: 1, r0: 2.0 }, 1.0)]).unwrap();
        let p = l.antiderivative();
        let want = 0.5 * (3f64.ln().powi(2) - 2f64.ln().powi(2));
        assert!((p.eval(3.0) - want).abs() < 1e-15);
    }

    #[test]
    fn wedge_and_d() {
        let t = SphereForm::dtheta();
        assert!(t.wedge(&t).is_zero());
        assert!(t.d().d().is_zero());
        // d(ω₁ ω₂²) ∧ dω₃ evaluated on the standard frame
        let f = SphereForm::monomial(3, vec![1, 2, 0], 0, 1.0).unwrap();
        let df = f.d();
        let v = df.eval_on(&[1.0, 1.0, 0.0], &[vec![1.0, 0.0, 0.0]]);
        assert_eq!(v, 1.0);
        let v = df.eval_on(&[1.0, 1.0, 0.0], &[vec![0.0, 1.0, 0.0]]);
        assert_eq!(v, 2.0);
    }
}
