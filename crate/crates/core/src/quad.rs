//! Adaptive Gauss–Kronrod quadrature, Gauss–Legendre rules, and sphere/ball
//! integration on R^p for p ≤ 3.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sum::Neumaier;

// Kronrod 15-point abscissae and weights; the 7-point Gauss rule uses the odd
// indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Absolute/relative tolerance pair. An estimate is accepted when
/// `err <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn abs(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-11, 1e-13)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round);
    }
    (result, err, resabs)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    absval: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_SEGMENTS: usize = 4000;
/// Accepted error floor relative to ∫|f|, just above the per-segment rounding bound.
const ROUNDOFF: f64 = 60.0 * f64::EPSILON;

/// Adaptive G7/K15 integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (v, e, r) = qk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e, absval: r });
    let mut total_v = v;
    let mut total_e = e;
    let mut total_abs = r;
    // errors at the rounding floor of the rule cannot be reduced further
    let target = |v: f64, abs: f64| tol.target(v).max(ROUNDOFF * abs);
    while total_e > target(total_v, total_abs) {
        if heap.len() >= MAX_SEGMENTS {
            break;
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1, r1) = qk15(&f, seg.a, mid);
        let (v2, e2, r2) = qk15(&f, mid, seg.b);
        total_v += v1 + v2 - seg.value;
        total_e += e1 + e2 - seg.error;
        total_abs += r1 + r2 - seg.absval;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1, absval: r1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2, absval: r2 });
        if heap.len() % 64 == 0 || total_e <= target(total_v, total_abs) {
            // recompute totals from scratch to avoid drift
            let mut sv = Neumaier::new();
            let mut se = 0.0;
            let mut sa = 0.0;
            for s in heap.iter() {
                sv.add(s.value);
                se += s.error;
                sa += s.absval;
            }
            total_v = sv.value();
            total_e = se;
            total_abs = sa;
        }
    }
    if !total_v.is_finite() {
        return Err(Error::Quadrature { what: format!("[{a}, {b}]"), tol: tol.abs, err: f64::INFINITY });
    }
    if total_e > target(total_v, total_abs) {
        return Err(Error::Quadrature { what: format!("[{a}, {b}]"), tol: target(total_v, total_abs), err: total_e });
    }
    Ok(Estimate { value: total_v, error: total_e })
}

/// Integrates over consecutive pieces `[p_0, p_1], [p_1, p_2], ...`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    let mut v = Neumaier::new();
    let mut e = 0.0;
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    let piece_tol = Tolerance::new(tol.abs / pieces, tol.rel);
    for w in points.windows(2) {
        let r = integrate(f, w[0], w[1], piece_tol)?;
        v.add(r.value);
        e += r.error;
    }
    Ok(Estimate { value: v.value(), error: e })
}

/// Integral over `[a, ∞)` with `a > 0`, summed over dyadic shells `[a 2^i, a 2^{i+1}]`.
///
/// Stops once the shells decay geometrically and the extrapolated tail is below
/// tolerance. The integrand must decay at least like `x^{-1-δ}`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    assert!(a > 0.0, "integrate_to_infinity needs a positive lower limit");
    let shell_tol = Tolerance::new(tol.abs * 1e-2, tol.rel);
    let mut acc = Neumaier::new();
    let mut err = 0.0;
    let mut lo = a;
    let mut prev: Option<f64> = None;
    for _ in 0..200 {
        let hi = 2.0 * lo;
        let shell = integrate(&f, lo, hi, shell_tol)?;
        acc.add(shell.value);
        err += shell.error;
        let s = shell.value;
        if let Some(p) = prev {
            let small = s.abs() <= tol.abs * 1e-3 && p.abs() <= tol.abs * 1e-3;
            if small {
                return Ok(Estimate { value: acc.value(), error: err + s.abs() });
            }
            if p != 0.0 {
                let q = s / p;
                if q > 0.0 && q < 0.9 {
                    let tail = s * q / (1.0 - q);
                    if tail.abs() <= tol.target(acc.value()) * 1e-2 {
                        acc.add(tail);
                        return Ok(Estimate { value: acc.value(), error: err + tail.abs() });
                    }
                }
            }
        }
        prev = Some(s);
        lo = hi;
    }
    Err(Error::Quadrature { what: format!("[{a}, inf)"), tol: tol.abs, err: prev.unwrap_or(f64::NAN).abs() })
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed-resolution product rule on S^{p-1}; `level` controls the resolution.
/// p = 1 is the two-point counting measure.
fn sphere_rule(p: usize, level: usize) -> Vec<(Vec<f64>, f64)> {
    match p {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let n = level;
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                    (vec![t.cos(), t.sin()], 2.0 * PI / n as f64)
                })
                .collect()
        }
        3 => {
            let nz = level;
            let nphi = 2 * level;
            let (z, wz) = gauss_legendre(nz);
            let mut out = Vec::with_capacity(nz * nphi);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for k in 0..nphi {
                    let t = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                    out.push((vec![s * t.cos(), s * t.sin(), *zi], wi * 2.0 * PI / nphi as f64));
                }
            }
            out
        }
        _ => panic!("sphere quadrature implemented for p <= 3"),
    }
}

/// Integrates `g` over S^{p-1} with a rule of the given resolution.
pub fn sphere_integrate_fixed<G: Fn(&[f64]) -> f64>(g: &G, p: usize, level: usize) -> f64 {
    let mut acc = Neumaier::new();
    for (w, wt) in sphere_rule(p, level) {
        acc.add(wt * g(&w));
    }
    acc.value()
}

/// Sphere integral with resolution doubling until two successive values agree
/// to `tol` (absolute, scaled by the magnitude when larger than one).
pub fn sphere_integrate<G: Fn(&[f64]) -> Result<f64>>(g: &G, p: usize, tol: f64) -> Result<f64> {
    if p == 1 {
        return Ok(g(&[1.0])? + g(&[-1.0])?);
    }
    if p > 3 || p == 0 {
        return Err(Error::Unsupported(format!("sphere integration in dimension {p}")));
    }
    let (mut level, max_level) = if p == 2 { (16, 8192) } else { (8, 256) };
    let eval = |level: usize| -> Result<f64> {
        let mut acc = Neumaier::new();
        for (w, wt) in sphere_rule(p, level) {
            acc.add(wt * g(&w)?);
        }
        Ok(acc.value())
    };
    let mut prev = eval(level)?;
    loop {
        level *= 2;
        let cur = eval(level)?;
        let change = (cur - prev).abs();
        if change <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        if level >= max_level {
            return Err(Error::QuadratureOrder { order: level, change });
        }
        prev = cur;
    }
}

/// Surface measure of S^{p-1} (2 for the two-point sphere S^0).
pub fn sphere_area(p: usize) -> f64 {
    let half = p as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_and_singular() {
        let r = integrate(|x| x * x, 0.0, 3.0, Tolerance::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-13);
        let r = integrate(|x: f64| x.sqrt().ln(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_power_decay() {
        let r = integrate_to_infinity(|x| x.powi(-2), 1.0, Tolerance::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11, "{}", r.value);
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 1.0, Tolerance::default()).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn legendre_rule_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        let s2 = sphere_integrate(&|w: &[f64]| Ok(w[2] * w[2]), 3, 1e-14).unwrap();
        assert!((s2 - 4.0 * PI / 3.0).abs() < 1e-13);
    }
}
