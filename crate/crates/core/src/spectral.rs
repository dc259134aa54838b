//! Laplacians on flat circles and tori: heat traces, zeta functions, heat
//! coefficients, the residue trace of powers and the canonical trace.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::asym::fit_expansion;
use crate::em::{self, C64};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::sum::Neumaier;

/// Terms below this are dropped from theta sums.
const THETA_CUTOFF: f64 = 1e-18;
/// Distance from a pole below which evaluation is refused.
pub const POLE_RADIUS: f64 = 1e-6;
/// Explicit lattice terms before the Euler–Maclaurin tail.
const EM_START: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralModel {
    /// Circle of radius R, eigenvalues (k/R)².
    Circle { radius: f64 },
    /// Flat torus R^n / ⊕ L_i Z, eigenvalues Σ (2π k_i / L_i)².
    Torus { sides: Vec<f64> },
}

impl SpectralModel {
    pub fn circle(radius: f64) -> Result<Self> {
        let m = SpectralModel::Circle { radius };
        m.validate()?;
        Ok(m)
    }

    pub fn torus(sides: Vec<f64>) -> Result<Self> {
        let m = SpectralModel::Torus { sides };
        m.validate()?;
        Ok(m)
    }

    pub fn unit_torus(n: usize) -> Self {
        SpectralModel::Torus { sides: vec![1.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralModel::Circle { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::InvalidInput(format!("circle radius must be positive, got {radius}")))
            }
            SpectralModel::Torus { sides } if sides.is_empty() || sides.len() > 3 => {
                Err(Error::InvalidInput(format!("torus dimension must be 1..=3, got {}", sides.len())))
            }
            SpectralModel::Torus { sides } if sides.iter().any(|l| !(*l > 0.0 && l.is_finite())) => {
                Err(Error::InvalidInput("torus side lengths must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectralModel::Circle { .. } => 1,
            SpectralModel::Torus { sides } => sides.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            SpectralModel::Circle { radius } => 2.0 * PI * radius,
            SpectralModel::Torus { sides } => sides.iter().product(),
        }
    }

    /// Per-direction frequencies a_i with eigenvalues Σ (a_i k_i)².
    pub fn frequencies(&self) -> Vec<f64> {
        match self {
            SpectralModel::Circle { radius } => vec![1.0 / radius],
            SpectralModel::Torus { sides } => sides.iter().map(|l| 2.0 * PI / l).collect(),
        }
    }

    /// Leading heat coefficient (4π)^{-n/2} vol.
    pub fn a0(&self) -> f64 {
        (4.0 * PI).powf(-(self.dim() as f64) / 2.0) * self.volume()
    }

    /// Eigenvalues ≤ `lambda_max` with multiplicity, nondecreasing.
    pub fn eigenvalues_up_to(&self, lambda_max: f64) -> Vec<f64> {
        let a = self.frequencies();
        let mut out = Vec::new();
        collect_lattice(&a, 0.0, lambda_max, &mut out);
        out.sort_by(f64::total_cmp);
        out
    }

    /// N(λ) = #{eigenvalues ≤ λ}.
    pub fn counting(&self, lambda: f64) -> u64 {
        count_lattice(&self.frequencies(), lambda)
    }

    /// vol (4π)^{-n/2} / Γ(n/2 + 1), the limit of N(λ)/λ^{n/2}.
    pub fn weyl_constant(&self) -> f64 {
        let n = self.dim() as f64;
        self.a0() / gamma(n / 2.0 + 1.0)
    }

    /// Σ e^{-tλ_j} with the per-direction switch between direct and dual sums.
    pub fn heat_trace(&self, t: f64) -> f64 {
        self.frequencies().iter().map(|a| theta(*a, t)).product()
    }

    /// Heat trace with every direction summed directly.
    pub fn heat_trace_direct(&self, t: f64) -> f64 {
        self.frequencies().iter().map(|a| 1.0 + theta_direct_excess(*a, t)).product()
    }

    /// Heat trace with every direction summed on the dual lattice.
    pub fn heat_trace_poisson(&self, t: f64) -> f64 {
        self.frequencies().iter().map(|a| theta_poisson(*a, t)).product()
    }

    /// θ(t) − dim ker Δ, without cancellation for large t.
    pub fn heat_trace_projected(&self, t: f64) -> f64 {
        let s: f64 = self
            .frequencies()
            .iter()
            .map(|a| {
                let u = a * a * t;
                if u >= 1.0 {
                    theta_direct_excess(*a, t).ln_1p()
                } else {
                    theta_poisson(*a, t).ln()
                }
            })
            .sum();
        s.exp_m1()
    }

    /// θ(t) − a_0 t^{-n/2}, exponentially small as t → 0.
    pub fn heat_trace_excess(&self, t: f64) -> f64 {
        let n = self.dim() as f64;
        let s: f64 = self.frequencies().iter().map(|a| poisson_excess(*a, t).ln_1p()).sum();
        self.a0() * t.powf(-n / 2.0) * s.exp_m1()
    }

    /// ζ(s) = Σ' λ_j^{-s}, meromorphically continued.
    pub fn zeta(&self, s: f64) -> Result<f64> {
        let pole = self.dim() as f64 / 2.0;
        if (s - pole).abs() < POLE_RADIUS {
            return Err(Error::Pole { s, pole, radius: POLE_RADIUS });
        }
        self.zeta_unchecked(s)
    }

    /// ζ(Δ^β, s) = Tr(Δ^β Δ^{-s}) = ζ(s − β).
    pub fn zeta_power(&self, beta: f64, s: f64) -> Result<f64> {
        let pole = self.dim() as f64 / 2.0 + beta;
        if (s - pole).abs() < POLE_RADIUS {
            return Err(Error::Pole { s, pole, radius: POLE_RADIUS });
        }
        self.zeta_unchecked(s - beta)
    }

    /// Mellin split at t = 1:
    /// ζ(s) = (1/Γ(s)) [a_0/(s − n/2) + ∫_0^1 t^{s-1}(θ − a_0 t^{-n/2}) + ∫_1^∞ t^{s-1}(θ − 1)] − 1/Γ(s+1).
    fn zeta_unchecked(&self, s: f64) -> Result<f64> {
        let n = self.dim() as f64;
        let tol = Tolerance::new(1e-17, 1e-14);
        let i1 = quad::integrate(
            |t| if t <= 0.0 { 0.0 } else { t.powf(s - 1.0) * self.heat_trace_excess(t) },
            0.0,
            1.0,
            tol,
        )?
        .value;
        let i2 = quad::integrate_to_infinity(|t| t.powf(s - 1.0) * self.heat_trace_projected(t), 1.0, tol)?.value;
        Ok(rgamma(s) * (self.a0() / (s - n / 2.0) + i1 + i2) - rgamma(s + 1.0))
    }

    /// Σ' λ_j^{-s} by lattice summation with Euler–Maclaurin tails in each
    /// direction; only meaningful for s > n/2.
    pub fn zeta_direct(&self, s: f64) -> Result<f64> {
        let n = self.dim() as f64;
        if s <= n / 2.0 {
            return Err(Error::InvalidInput(format!("eigenvalue sum diverges for s = {s} ≤ n/2")));
        }
        let v = lattice_zeta(&self.frequencies(), C64::new(0.0, 0.0), s)?;
        Ok(v.re)
    }

    /// Heat coefficients a_0..a_jmax (closed form, flat metric) cross-checked
    /// against a least-squares fit of θ(t) on t ∈ [1e-4, 1e-2], scaled down by
    /// (min L_i)² for tori with sides shorter than one.
    pub fn heat_coefficients(&self, jmax: usize) -> Result<HeatCoefficients> {
        if jmax > 6 {
            return Err(Error::InvalidInput(format!("jmax = {jmax} exceeds 6")));
        }
        let n = self.dim() as f64;
        let mut coefficients = vec![0.0; jmax + 1];
        coefficients[0] = self.a0();
        // shrink the window for short periods so the dual-lattice terms stay negligible
        let amax = self.frequencies().into_iter().fold(0.0, f64::max);
        let shrink = (2.0 * PI / amax).min(1.0).powi(2);
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = shrink * 10f64.powf(-4.0 + 2.0 * i as f64 / 39.0);
                (t, self.heat_trace(t))
            })
            .collect();
        let basis: Vec<(f64, u32)> = (0..=jmax).map(|j| ((j as f64 - n) / 2.0, 0)).collect();
        let fit = fit_expansion(&samples, &basis)?;
        let fitted: Vec<f64> = fit.coefficients.iter().map(|(_, _, c)| *c).collect();
        // log-log slope between the ends of the window
        let (t0, f0) = samples[0];
        let (t1, f1) = samples[samples.len() - 1];
        let leading_exponent = (f1.ln() - f0.ln()) / (t1.ln() - t0.ln());
        // compare contributions a_j t^{(j-n)/2} relative to the leading term at the window edge
        for (j, (c, f)) in coefficients.iter().zip(&fitted).enumerate() {
            let allowed = 1e-6 * coefficients[0].abs() * t1.powf(-(j as f64) / 2.0);
            if (c - f).abs() > allowed {
                return Err(Error::Inconsistent(format!("heat coefficient a_{j}: closed form {c}, fit {f}")));
            }
        }
        Ok(HeatCoefficients { coefficients, fitted, leading_exponent, fit_residual: fit.residual })
    }

    /// Res(Δ^α) by the heat-coefficient formula and by the zeta pole.
    pub fn residue_trace_power(&self, alpha: f64) -> Result<ResidueTrace> {
        let n = self.dim() as f64;
        let hc = self.heat_coefficients(6)?;
        let mut heat = 0.0;
        for (j, a) in hc.coefficients.iter().enumerate() {
            let g = (j as f64 - n) / 2.0;
            if (alpha - g).abs() < 1e-12 && g < 0.0 && *a != 0.0 {
                heat = 2.0 * a / gamma(-g);
            }
        }
        let zeta = 2.0 * self.zeta_residue(-alpha)?;
        Ok(ResidueTrace { alpha, heat, zeta })
    }

    /// Res_{s=z} ζ(s) from h(ζ(z+h) − ζ(z−h))/2 with one Richardson step.
    pub fn zeta_residue(&self, z: f64) -> Result<f64> {
        let e = |h: f64| -> Result<f64> { Ok(0.5 * h * (self.zeta_unchecked(z + h)? - self.zeta_unchecked(z - h)?)) };
        let h = 1e-3;
        let (e1, e2) = (e(h)?, e(h / 2.0)?);
        Ok((4.0 * e2 - e1) / 3.0)
    }

    /// Canonical trace of Δ^{-s}: the continued zeta value, for operator
    /// orders −2s outside {−n, −n+1, ...}.
    pub fn kv_trace(&self, s: f64) -> Result<f64> {
        let order = -2.0 * s;
        let n = self.dim() as f64;
        if (order - order.round()).abs() < 1e-12 && order.round() >= -n {
            return Err(Error::IntegralOrder { order });
        }
        self.zeta(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatCoefficients {
    /// a_j, indexed so that θ(t) ~ Σ a_j t^{(j−n)/2}.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub leading_exponent: f64,
    pub fit_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidueTrace {
    pub alpha: f64,
    /// 2 a_j / Γ((n−j)/2).
    pub heat: f64,
    /// 2 Res_{s=0} Tr(Δ^{α−s}).
    pub zeta: f64,
}

/// vol(S^{n-1}) / (2π)^n, the density of Res(Δ^{-n/2}) per unit volume.
pub fn residue_density(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * PI.powf(nf / 2.0) / gamma(nf / 2.0) / (2.0 * PI).powi(n as i32)
}

/// 1/Γ(x), zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

fn theta(a: f64, t: f64) -> f64 {
    if a * a * t >= 1.0 {
        1.0 + theta_direct_excess(a, t)
    } else {
        theta_poisson(a, t)
    }
}

/// 2 Σ_{k≥1} e^{-t a² k²}.
fn theta_direct_excess(a: f64, t: f64) -> f64 {
    let u = a * a * t;
    let mut acc = Neumaier::new();
    let mut k = 1.0f64;
    loop {
        let term = (-u * k * k).exp();
        acc.add(2.0 * term);
        if term < THETA_CUTOFF * acc.value().max(1e-300) || term == 0.0 {
            break;
        }
        k += 1.0;
    }
    acc.value()
}

/// 2 Σ_{m≥1} e^{-π² m² / (a² t)}.
fn poisson_excess(a: f64, t: f64) -> f64 {
    let v = PI * PI / (a * a * t);
    let mut acc = Neumaier::new();
    let mut m = 1.0f64;
    loop {
        let term = (-v * m * m).exp();
        acc.add(2.0 * term);
        if term < THETA_CUTOFF || term == 0.0 {
            break;
        }
        m += 1.0;
    }
    acc.value()
}

fn theta_poisson(a: f64, t: f64) -> f64 {
    PI.sqrt() / (a * t.sqrt()) * (1.0 + poisson_excess(a, t))
}

fn collect_lattice(a: &[f64], base: f64, max: f64, out: &mut Vec<f64>) {
    let Some((first, rest)) = a.split_first() else {
        out.push(base);
        return;
    };
    let kmax = max_index(*first, max - base);
    for k in -kmax..=kmax {
        let v = base + (first * k as f64).powi(2);
        if v <= max {
            collect_lattice(rest, v, max, out);
        }
    }
}

fn count_lattice(a: &[f64], budget: f64) -> u64 {
    if budget < 0.0 {
        return 0;
    }
    let Some((first, rest)) = a.split_first() else {
        return 1;
    };
    let kmax = max_index(*first, budget);
    if rest.is_empty() {
        return 2 * kmax as u64 + 1;
    }
    (-kmax..=kmax).map(|k| count_lattice(rest, budget - (first * k as f64).powi(2))).sum()
}

/// Largest k ≥ 0 with (a k)² ≤ budget (budget ≥ 0).
fn max_index(a: f64, budget: f64) -> i64 {
    if budget < 0.0 {
        return -1;
    }
    let mut k = (budget.sqrt() / a).floor() as i64;
    while (a * (k + 1) as f64).powi(2) <= budget {
        k += 1;
    }
    while k > 0 && (a * k as f64).powi(2) > budget {
        k -= 1;
    }
    k
}

/// Σ_{k ∈ Z^d} (c + Σ (a_i k_i)²)^{-s}, omitting a zero base term.
fn lattice_zeta(a: &[f64], c: C64, s: f64) -> Result<C64> {
    let Some((first, rest)) = a.split_first() else {
        return Ok(if c.norm() == 0.0 { C64::new(0.0, 0.0) } else { c.powf(-s) });
    };
    let failed = std::cell::Cell::new(false);
    let f = |z: C64| match lattice_zeta(rest, c + z * z * (first * first), s) {
        Ok(v) => v,
        Err(_) => {
            failed.set(true);
            C64::new(f64::NAN, 0.0)
        }
    };
    let total = f(C64::new(0.0, 0.0)) + em::positive_sum(&f, EM_START)? * 2.0;
    if failed.get() || !total.re.is_finite() {
        return Err(Error::Quadrature { what: "lattice zeta tail".into(), tol: 0.0, err: f64::NAN });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches_agree_at_switch() {
        let m = SpectralModel::circle(1.0).unwrap();
        let d = m.heat_trace_direct(1.0);
        let p = m.heat_trace_poisson(1.0);
        assert!((d - p).abs() < 1e-12, "{d} {p}");
        assert!((d - 1.7726372).abs() < 1e-7);
    }

    #[test]
    fn lattice_counting() {
        let m = SpectralModel::circle(1.0).unwrap();
        assert_eq!(m.counting(4.0), 5);
        assert_eq!(m.eigenvalues_up_to(4.0), vec![0.0, 1.0, 1.0, 4.0, 4.0]);
        let t = SpectralModel::unit_torus(2);
        let four_pi2 = 4.0 * PI * PI;
        assert_eq!(t.counting(four_pi2 * 1.0000001), 5);
        assert_eq!(t.eigenvalues_up_to(four_pi2 * 2.0000001).len(), 9);
    }

    #[test]
    fn zeta_at_two_on_circle() {
        let m = SpectralModel::circle(1.0).unwrap();
        let z = m.zeta(2.0).unwrap();
        assert!((z - PI.powi(4) / 45.0).abs() < 1e-12, "{z}");
        let d = m.zeta_direct(2.0).unwrap();
        assert!((d - PI.powi(4) / 45.0).abs() < 1e-13, "{d}");
        assert!(m.zeta(0.5).is_err());
    }

    #[test]
    fn kv_rejects_integral_orders() {
        let m = SpectralModel::circle(1.0).unwrap();
        assert!(matches!(m.kv_trace(-0.5), Err(Error::IntegralOrder { .. })));
        assert!(matches!(m.kv_trace(0.0), Err(Error::IntegralOrder { .. })));
        assert!(m.kv_trace(2.0).is_ok());
    }
}
