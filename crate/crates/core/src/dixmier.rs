//! Logarithmic averages α_N = (1/log(N+1)) Σ_{j≤N} μ_j of nonincreasing
//! sequences, a convergence-aware surrogate for the Dixmier trace, counting
//! functions and the Tauberian checks, and min-max inequalities for matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralModel;
use crate::sum::Neumaier;

/// Dyadic sample points 2^10 ..= 2^23.
pub const DYADIC_MIN: u32 = 10;
pub const DYADIC_MAX: u32 = 23;
/// Largest sequence length accepted by [`alpha_sums`].
pub const MAX_LENGTH: usize = 10_000_000;
/// Dispersion of the final extrapolation window below which α_N counts as converged.
pub const CONVERGENCE_DISPERSION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum EigenSequence {
    /// μ_j = scale / j.
    Harmonic { scale: f64 },
    /// μ_j = j^{-p}.
    Power { p: f64 },
    /// μ_j = min_{i ≤ j} c_i / i with c_i = 1 on even dyadic blocks
    /// [2^k, 2^{k+1}) and 2 on odd ones.
    DyadicAlternating,
    /// μ_j = λ_j^{-n/2} over the nonzero Laplacian eigenvalues of a model.
    Model(SpectralModel),
    /// An explicit finite sequence.
    Explicit(Vec<f64>),
}

impl EigenSequence {
    /// The first `n` terms; rejects non-monotone or nonpositive data.
    pub fn take(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self {
            EigenSequence::Harmonic { scale } => (1..=n).map(|j| scale / j as f64).collect(),
            EigenSequence::Power { p } => (1..=n).map(|j| (j as f64).powf(-p)).collect(),
            EigenSequence::DyadicAlternating => {
                let mut out = Vec::with_capacity(n);
                let mut m = f64::INFINITY;
                for j in 1..=n {
                    let block = usize::BITS - 1 - j.leading_zeros();
                    let c = if block % 2 == 0 { 1.0 } else { 2.0 };
                    m = m.min(c / j as f64);
                    out.push(m);
                }
                out
            }
            EigenSequence::Model(model) => model_sequence(model, n),
            EigenSequence::Explicit(v) => {
                if v.len() < n {
                    return Err(Error::InvalidInput(format!("sequence has {} terms, {n} requested", v.len())));
                }
                v[..n].to_vec()
            }
        };
        check_monotone(&v)?;
        Ok(v)
    }

    /// F(λ) = #{j : μ_j^{-1} ≤ λ}.
    pub fn counting(&self, lambda: f64) -> Result<u64> {
        Ok(match self {
            EigenSequence::Harmonic { scale } => (scale * lambda).floor().max(0.0) as u64,
            EigenSequence::Power { p } => lambda.max(0.0).powf(1.0 / p).floor() as u64,
            EigenSequence::Model(model) => {
                let n = model.dim() as f64;
                model.counting(lambda.powf(2.0 / n)).saturating_sub(1)
            }
            EigenSequence::DyadicAlternating | EigenSequence::Explicit(_) => {
                let v = match self {
                    EigenSequence::Explicit(v) => v.clone(),
                    _ => self.take(((4.0 * lambda).ceil() as usize + 2).min(MAX_LENGTH))?,
                };
                v.iter().filter(|m| **m * lambda >= 1.0).count() as u64
            }
        })
    }

    /// ζ_F(s) = Σ_{μ_j ≤ 1} μ_j^s for s > 1 (closed forms for the analytic families).
    pub fn zeta_of_counting(&self, s: f64) -> Result<f64> {
        let circle = SpectralModel::Circle { radius: 1.0 };
        let riemann = |x: f64| -> Result<f64> { Ok(0.5 * circle.zeta(x / 2.0)?) };
        match self {
            EigenSequence::Harmonic { scale } => {
                let mut z = scale.powf(s) * riemann(s)?;
                let mut j = 1usize;
                while scale / j as f64 > 1.0 {
                    z -= (scale / j as f64).powf(s);
                    j += 1;
                }
                Ok(z)
            }
            EigenSequence::Power { p } => riemann(p * s),
            EigenSequence::Model(model) => {
                // all μ_j ≤ 1 unless the smallest nonzero eigenvalue is below 1
                let n = model.dim() as f64;
                let mut z = model.zeta(n * s / 2.0)?;
                let small = model.eigenvalues_up_to(1.0);
                for l in small.into_iter().filter(|l| *l > 0.0 && *l < 1.0) {
                    z -= l.powf(-n * s / 2.0);
                }
                Ok(z)
            }
            EigenSequence::DyadicAlternating | EigenSequence::Explicit(_) => {
                Err(Error::Unsupported("zeta of the counting function needs a closed form or a spectral model".into()))
            }
        }
    }
}

fn check_monotone(v: &[f64]) -> Result<()> {
    for (i, w) in v.windows(2).enumerate() {
        if !(w[1] <= w[0]) {
            return Err(Error::NonMonotone { index: i + 1 });
        }
    }
    if let Some(i) = v.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::NonMonotone { index: i });
    }
    Ok(())
}

fn model_sequence(model: &SpectralModel, n: usize) -> Vec<f64> {
    let d = model.dim() as f64;
    let mut lmax =
        (1.1 * (n as f64 + 1.0) / model.weyl_constant()).powf(2.0 / d) + 4.0 * model.frequencies()[0].powi(2);
    loop {
        if (model.counting(lmax) as usize) > n {
            break;
        }
        lmax *= 1.5;
    }
    let eig = model.eigenvalues_up_to(lmax);
    eig.into_iter().filter(|l| *l > 0.0).take(n).map(|l| l.powf(-d / 2.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DixmierDiagnostics {
    pub length: usize,
    /// (N, α_N) at N = 2^10, 2^11, ... up to the sequence length.
    pub alpha: Vec<(usize, f64)>,
    /// Running means of the dyadic α samples.
    pub cesaro: Vec<f64>,
    /// Extrapolated limits L from each consecutive triple of dyadic samples.
    pub extrapolated: Vec<f64>,
    /// Spread (max − min) of the last three extrapolated values.
    pub dispersion: f64,
    pub converged: bool,
}

/// Partial sums with compensated summation and α_N at dyadic N.
pub fn alpha_sums(seq: &[f64]) -> Result<DixmierDiagnostics> {
    if seq.len() > MAX_LENGTH {
        return Err(Error::InvalidInput(format!("sequence length {} exceeds {MAX_LENGTH}", seq.len())));
    }
    check_monotone(seq)?;
    let mut acc = Neumaier::new();
    let mut alpha = Vec::new();
    let mut next = 1usize << DYADIC_MIN;
    for (i, m) in seq.iter().enumerate() {
        acc.add(*m);
        let n = i + 1;
        if n == next {
            alpha.push((n, alpha_value(acc.value(), n)));
            if next >= 1 << DYADIC_MAX {
                break;
            }
            next <<= 1;
        }
    }
    let mut cesaro = Vec::with_capacity(alpha.len());
    let mut running = 0.0;
    for (i, (_, a)) in alpha.iter().enumerate() {
        running += a;
        cesaro.push(running / (i + 1) as f64);
    }
    let extrapolated: Vec<f64> = alpha.windows(3).map(extrapolate_triple).collect();
    let tail = &extrapolated[extrapolated.len().saturating_sub(3)..];
    let dispersion = if tail.len() < 3 {
        f64::INFINITY
    } else {
        tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let scale = tail.last().map(|v| v.abs().max(1.0)).unwrap_or(1.0);
    Ok(DixmierDiagnostics {
        length: seq.len(),
        alpha,
        cesaro,
        extrapolated,
        dispersion,
        converged: dispersion < CONVERGENCE_DISPERSION * scale,
    })
}

/// α_N for a given partial sum.
pub fn alpha_value(partial_sum: f64, n: usize) -> f64 {
    partial_sum / ((n + 1) as f64).ln()
}

/// Solves α = L + c/log N + d/log²N through three samples and returns L.
fn extrapolate_triple(w: &[(usize, f64)]) -> f64 {
    let m = DMatrix::from_fn(3, 3, |i, j| (w[i].0 as f64).ln().powi(-(j as i32)));
    let rhs = nalgebra::DVector::from_fn(3, |i, _| w[i].1);
    m.lu().solve(&rhs).map(|x| x[0]).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DixmierEstimate {
    /// The extrapolated limit, present only when the diagnostics converged.
    pub value: Option<f64>,
    /// α_N at the largest dyadic N.
    pub raw: f64,
    /// The last extrapolation, reported regardless of convergence.
    pub extrapolated: f64,
    pub converged: bool,
    pub dispersion: f64,
}

pub fn dixmier_estimate(diag: &DixmierDiagnostics) -> DixmierEstimate {
    let raw = diag.alpha.last().map(|(_, a)| *a).unwrap_or(f64::NAN);
    let extrapolated = diag.extrapolated.last().copied().unwrap_or(raw);
    DixmierEstimate {
        value: diag.converged.then_some(extrapolated),
        raw,
        extrapolated,
        converged: diag.converged,
        dispersion: diag.dispersion,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkeharaCheck {
    /// Richardson limit of h ζ_F(1 + h) as h → 0+.
    pub l_from_zeta: Option<f64>,
    /// F(λ)/λ at the given λ.
    pub l_from_counting: f64,
    /// (j, j μ_j) at dyadic j.
    pub j_mu_tail: Vec<(usize, f64)>,
}

pub fn ikehara_check(seq: &EigenSequence, lambda: f64) -> Result<IkeharaCheck> {
    let l_from_zeta = match seq.zeta_of_counting(2.0) {
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
        Ok(_) => {
            let g = |h: f64| -> Result<f64> { Ok(h * seq.zeta_of_counting(1.0 + h)?) };
            let h = 0.02;
            let (g1, g2, g3) = (g(h)?, g(h / 2.0)?, g(h / 4.0)?);
            // quadratic Richardson in h
            let r1 = 2.0 * g2 - g1;
            let r2 = 2.0 * g3 - g2;
            Some((4.0 * r2 - r1) / 3.0)
        }
    };
    let l_from_counting = seq.counting(lambda)? as f64 / lambda;
    let n = 1usize << 16;
    let mu = seq.take(n)?;
    let j_mu_tail = (8..=16).map(|k| 1usize << k).map(|j| (j, j as f64 * mu[j - 1])).collect();
    Ok(IkeharaCheck { l_from_zeta, l_from_counting, j_mu_tail })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnesCheck {
    pub dixmier: DixmierEstimate,
    /// Res(Δ^{-n/2}) / n by the heat-coefficient route.
    pub residue_over_n: f64,
    /// The same through the zeta pole.
    pub residue_over_n_zeta: f64,
}

/// Dixmier estimate of Δ^{-n/2} (off the kernel) against Res(Δ^{-n/2})/n.
pub fn connes_check(model: &SpectralModel, length: usize) -> Result<ConnesCheck> {
    let n = model.dim() as f64;
    let mu = EigenSequence::Model(model.clone()).take(length)?;
    let dixmier = dixmier_estimate(&alpha_sums(&mu)?);
    let res = model.residue_trace_power(-n / 2.0)?;
    Ok(ConnesCheck { dixmier, residue_over_n: res.heat / n, residue_over_n_zeta: res.zeta / n })
}

/// Eigenvalues in decreasing order; rejects matrices that are not PSD.
fn psd_eigenvalues(t: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !t.is_square() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    let scale = t.amax().max(1.0);
    if (t - t.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidInput("matrix must be symmetric".into()));
    }
    let mut ev: Vec<f64> = t.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let min = ev.last().copied().unwrap_or(0.0);
    if min < -1e-12 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(ev)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HerschCheck {
    pub holds: bool,
    /// Largest violation found (≤ 0 when the inequalities hold).
    pub worst: f64,
    pub left_equality: bool,
    pub right_equality: bool,
}

/// Σ_{j≤N} μ_j(T1+T2) ≤ Σ_{j≤N} (μ_j(T1) + μ_j(T2)) ≤ Σ_{j≤2N} μ_j(T1+T2) for all N.
pub fn hersch_check(t1: &DMatrix<f64>, t2: &DMatrix<f64>) -> Result<HerschCheck> {
    if t1.shape() != t2.shape() {
        return Err(Error::DimensionMismatch { expected: t1.nrows(), got: t2.nrows() });
    }
    if t1.nrows() > 16 {
        return Err(Error::InvalidInput(format!("dimension {} exceeds 16", t1.nrows())));
    }
    let (a, b, s) = (psd_eigenvalues(t1)?, psd_eigenvalues(t2)?, psd_eigenvalues(&(t1 + t2))?);
    let d = a.len();
    let prefix = |v: &[f64], n: usize| -> f64 { v.iter().take(n).sum() };
    let tol = 1e-12 * (prefix(&a, d) + prefix(&b, d)).max(1.0);
    let mut worst = f64::NEG_INFINITY;
    let (mut left_eq, mut right_eq) = (true, true);
    for n in 1..=d {
        let lhs = prefix(&s, n);
        let mid = prefix(&a, n) + prefix(&b, n);
        let rhs = prefix(&s, 2 * n);
        worst = worst.max(lhs - mid).max(mid - rhs);
        left_eq &= (lhs - mid).abs() <= tol;
        right_eq &= (mid - rhs).abs() <= tol;
    }
    Ok(HerschCheck { holds: worst <= tol, worst, left_equality: left_eq, right_equality: right_eq })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_limit() {
        let mu = EigenSequence::Harmonic { scale: 1.0 }.take(1 << 20).unwrap();
        let est = dixmier_estimate(&alpha_sums(&mu).unwrap());
        assert!(est.converged);
        assert!((est.value.unwrap() - 1.0).abs() < 1e-5, "{est:?}");
    }

    #[test]
    fn trace_class_gives_zero() {
        let mu = EigenSequence::Power { p: 2.0 }.take(1 << 20).unwrap();
        let est = dixmier_estimate(&alpha_sums(&mu).unwrap());
        assert!(est.converged);
        assert!(est.value.unwrap().abs() < 1e-4, "{est:?}");
    }

    #[test]
    fn rejects_increasing_input() {
        assert_eq!(alpha_sums(&[1.0, 0.5, 0.7]), Err(Error::NonMonotone { index: 2 }));
        assert!(alpha_sums(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn hersch_on_identity_and_scalars() {
        let i = DMatrix::<f64>::identity(4, 4);
        let h = hersch_check(&i, &i).unwrap();
        assert!(h.holds && h.left_equality);
        let a = DMatrix::from_element(1, 1, 2.0);
        let b = DMatrix::from_element(1, 1, 3.0);
        let h = hersch_check(&a, &b).unwrap();
        assert!(h.holds && h.left_equality && h.right_equality);
        let neg = DMatrix::from_element(1, 1, -1.0);
        assert!(matches!(hersch_check(&neg, &b), Err(Error::NotPsd { .. })));
    }
}
