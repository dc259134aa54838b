use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regtrace::acceptance::{cone_samples, run_criterion};
use regtrace::asym::{bq_expansion, fit_expansion, numeric_f, sample_f, BracketKernel};
use regtrace::cone::{
    corpus, fiber_integrate, homotopy_defect, stokes_property_check, symbol_form_corpus, thom_section, SphereForm,
};
use regtrace::dixmier::{alpha_sums, connes_check, dixmier_estimate, ikehara_check, EigenSequence};
use regtrace::expansion::AsymptoticExpansion;
use regtrace::param_trace::{
    derived_trace, res_of_tr, shipped_family, tr_bar, trace_expansion, trace_function, ParamMultiplier,
};
use regtrace::regint::{
    ball_integral_expansion, change_of_variables_check, partie_finie, residue_integral, stokes_defect,
    stokes_defect_brute_force, Normalization,
};
use regtrace::spectral::SpectralModel;
use regtrace::symbol::SymbolExpansion;
use regtrace::{Error, Result};
use serde_json::{json, Map, Value};

use crate::args::*;

pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Default)]
pub struct Report {
    pub value: Option<f64>,
    pub values: Map<String, Value>,
    pub expansion: Option<Value>,
    pub diagnostics: Value,
    pub series: Option<Series>,
    /// A check ran to completion and did not hold.
    pub failed: bool,
}

impl Report {
    fn scalar(v: f64) -> Self {
        Report { value: Some(v), diagnostics: json!({}), ..Default::default() }
    }

    fn set(&mut self, k: &str, v: impl Into<Value>) {
        self.values.insert(k.into(), v.into());
    }
}

fn symbol(a: &SymbolArgs) -> Result<SymbolExpansion> {
    SymbolExpansion::from_json(a.symbol.value())
}

pub fn parse_model(s: &str) -> Result<SpectralModel> {
    let bad = || Error::InvalidInput(format!("unknown model {s:?} (circle, circle:R, torus2, torus3, torus:L1,L2,..)"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    match s {
        "circle" => SpectralModel::circle(1.0),
        "torus2" => Ok(SpectralModel::unit_torus(2)),
        "torus3" => Ok(SpectralModel::unit_torus(3)),
        _ => match s.split_once(':') {
            Some(("circle", r)) => SpectralModel::circle(num(r)?),
            Some(("torus", l)) => SpectralModel::torus(l.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(bad()),
        },
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

pub fn execute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Pf(a) => {
            let s = symbol(a)?;
            let mut r = Report::scalar(partie_finie(&s)?);
            r.expansion = Some(ball_integral_expansion(&s)?.to_json());
            r.diagnostics = json!({ "dimension": s.dim(), "order": s.order(), "logdeg": s.logdeg() });
            Ok(r)
        }
        Command::Res(a) => {
            let s = symbol(&a.symbol)?;
            let n = match a.normalization {
                Norm::Raw => Normalization::Raw,
                Norm::TwoPiPower => Normalization::TwoPiPower,
            };
            let mut r = Report::scalar(residue_integral(&s, n)?);
            r.diagnostics = json!({ "dimension": s.dim(), "order": s.order() });
            Ok(r)
        }
        Command::CovCheck(a) => {
            let s = symbol(&a.symbol)?;
            let p = s.dim();
            let rows = &a.matrix.0;
            if rows.len() != p || rows.iter().any(|row| row.len() != p) {
                return Err(Error::DimensionMismatch { expected: p, got: rows.len() });
            }
            let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
            let c = change_of_variables_check(&s, &m)?;
            let mut r = Report { diagnostics: json!({ "determinant": m.determinant() }), ..Default::default() };
            r.set("lhs", c.lhs);
            r.set("rhs", c.rhs);
            r.set("correction", c.correction);
            r.set("difference", c.lhs - c.rhs);
            Ok(r)
        }
        Command::Stokes(a) => {
            let s = symbol(&a.symbol)?;
            let mut r = Report::scalar(stokes_defect(&s, a.axis)?);
            if a.brute_force {
                r.set("brute_force", stokes_defect_brute_force(&s, a.axis)?);
            }
            Ok(r)
        }
        Command::Expand(a) => expand(a),
        Command::Heat(a) => heat(a),
        Command::Zeta(a) => {
            let m = parse_model(&a.model.model)?;
            let mut r = Report::scalar(m.zeta(a.s)?);
            let direct = m.zeta_direct(a.s).ok();
            r.diagnostics = json!({ "dimension": m.dim(), "direct_sum": direct });
            Ok(r)
        }
        Command::Restrace(a) => {
            let m = parse_model(&a.model.model)?;
            let alpha = a.alpha.unwrap_or(-(m.dim() as f64) / 2.0);
            let t = m.residue_trace_power(alpha)?;
            let mut r = Report { diagnostics: json!({ "alpha": alpha, "volume": m.volume() }), ..Default::default() };
            r.set("heat", t.heat);
            r.set("zeta", t.zeta);
            Ok(r)
        }
        Command::Kv(a) => {
            let m = parse_model(&a.model.model)?;
            Ok(Report::scalar(m.kv_trace(a.s)?))
        }
        Command::Dixmier(a) => dixmier(a),
        Command::Connes(a) => {
            let m = parse_model(&a.model.model)?;
            let c = connes_check(&m, a.length)?;
            let mut r = Report::default();
            r.set("dixmier", c.dixmier.extrapolated);
            r.set("raw", c.dixmier.raw);
            r.set("residue_over_n", c.residue_over_n);
            r.set("residue_over_n_zeta", c.residue_over_n_zeta);
            r.diagnostics = json!({ "converged": c.dixmier.converged, "dispersion": c.dixmier.dispersion });
            Ok(r)
        }
        Command::ParamTr(a) => param_tr(a),
        Command::ThomCheck(a) => thom_check(a),
        Command::Corpus(a) => {
            let ids: Vec<usize> = if a.only.is_empty() { (1..=10).collect() } else { a.only.clone() };
            let mut rows = Vec::new();
            let mut passed = 0;
            for id in &ids {
                let c = run_criterion(*id, a.seed)?;
                eprintln!("{}", c.line());
                passed += c.passed as usize;
                rows.push(json!({
                    "id": c.id, "name": c.name, "passed": c.passed, "detail": c.detail,
                    "elapsed": c.elapsed.as_secs_f64(), "budget": c.budget.as_secs_f64(),
                }));
            }
            let mut r = Report { diagnostics: Value::Array(rows), failed: passed < ids.len(), ..Default::default() };
            r.set("passed", passed);
            r.set("total", ids.len());
            Ok(r)
        }
    }
}

fn expand(a: &ExpandArgs) -> Result<Report> {
    let s = symbol(&a.symbol)?;
    let q = BracketKernel { dim: s.dim(), s: a.s };
    let e = bq_expansion(&s, &q, a.depth)?;
    let mut r = Report { expansion: Some(e.to_json()), diagnostics: json!({}), ..Default::default() };
    if a.fit {
        let samples = sample_f(&s, &q, a.lambda_min, a.lambda_max, a.points)?;
        let basis: Vec<(f64, u32)> =
            e.entries().iter().take(a.points.saturating_sub(2).max(1)).map(|t| (t.0, t.1)).collect();
        let fit = fit_expansion(&samples, &basis)?;
        let coeffs: Vec<Value> =
            fit.coefficients.iter().map(|(x, l, c)| json!({ "exponent": x, "logpow": l, "coefficient": c })).collect();
        r.diagnostics = json!({ "fit": coeffs, "residual": fit.residual, "condition": fit.condition });
        let rows = samples.iter().map(|&(l, f)| vec![l, f, e.eval(l)]).collect();
        r.series = Some(Series { columns: vec!["lambda".into(), "numeric".into(), "expansion".into()], rows });
    } else {
        let l = a.lambda_max;
        r.diagnostics = json!({ "lambda": l, "numeric": numeric_f(&s, &q, l)?, "expansion_value": e.eval(l) });
    }
    Ok(r)
}

fn heat(a: &HeatArgs) -> Result<Report> {
    let m = parse_model(&a.model.model)?;
    if !(a.t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {} must be positive", a.t)));
    }
    let mut r = Report::scalar(m.heat_trace(a.t));
    let h = m.heat_coefficients(a.jmax)?;
    let n = m.dim() as f64;
    let mut e = AsymptoticExpansion::new("t", (a.jmax as f64 + 1.0 - n) / 2.0);
    for (j, c) in h.coefficients.iter().enumerate() {
        e.add((j as f64 - n) / 2.0, 0, *c);
    }
    e.drop_zeros();
    r.expansion = Some(e.to_json());
    r.diagnostics = json!({
        "direct": m.heat_trace_direct(a.t),
        "poisson": m.heat_trace_poisson(a.t),
        "fitted_coefficients": h.fitted,
        "fit_residual": h.fit_residual,
    });
    if let Some(hi) = a.t_max {
        let rows = log_grid(a.t, hi, a.points).into_iter().map(|t| vec![t, m.heat_trace(t), e.eval(t)]).collect();
        r.series = Some(Series { columns: vec!["t".into(), "heat_trace".into(), "expansion".into()], rows });
    }
    Ok(r)
}

fn dixmier(a: &DixmierArgs) -> Result<Report> {
    if a.length > 10_000_000 {
        return Err(Error::InvalidInput(format!("length {} exceeds 10^7", a.length)));
    }
    let seq = match a.sequence {
        SequenceKind::Harmonic => EigenSequence::Harmonic { scale: a.scale },
        SequenceKind::Power => EigenSequence::Power { p: a.p },
        SequenceKind::Dyadic => EigenSequence::DyadicAlternating,
        SequenceKind::Model => EigenSequence::Model(parse_model(&a.model.model)?),
    };
    let diag = alpha_sums(&seq.take(a.length)?)?;
    let est = dixmier_estimate(&diag);
    let mut r = Report { value: est.value, ..Default::default() };
    r.set("raw", est.raw);
    r.set("extrapolated", est.extrapolated);
    r.set("converged", est.converged);
    r.diagnostics = json!({ "dispersion": est.dispersion, "cesaro": diag.cesaro, "extrapolations": diag.extrapolated });
    if let Some(l) = a.ikehara {
        let k = ikehara_check(&seq, l)?;
        r.set("l_from_counting", k.l_from_counting);
        r.set("l_from_zeta", k.l_from_zeta);
    }
    let rows = diag.alpha.iter().map(|&(n, v)| vec![n as f64, v]).collect();
    r.series = Some(Series { columns: vec!["n".into(), "alpha".into()], rows });
    Ok(r)
}

fn param_tr(a: &ParamTrArgs) -> Result<Report> {
    let family = shipped_family();
    if a.list_families {
        let names: Vec<&str> = family.iter().map(|(n, _)| *n).collect();
        return Ok(Report { diagnostics: json!({ "families": names }), ..Default::default() });
    }
    let mult = match (&a.family, &a.multiplier) {
        (Some(name), _) => family
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family {name:?}")))?,
        (None, Some(MultiplierSource::Terms(t))) => ParamMultiplier::from_terms(t.clone())?,
        (None, Some(MultiplierSource::File(_))) => unreachable!("multiplier files are resolved before execution"),
        (None, None) => ParamMultiplier::bracket(-1.0, 1.0)?,
    };
    let tf = trace_function(&mult)?;
    let mut r = Report::scalar(tf.derivative(a.mu, a.derivative)?);
    r.expansion = Some(trace_expansion(&mult)?.to_json());
    r.diagnostics = json!({ "order": mult.order(), "alpha": tf.alpha(), "ambiguity_degree": tf.ambiguity_degree() });
    if a.regularized {
        r.set("tr_bar", tr_bar(&mult)?);
        r.set("derived_trace", derived_trace(&mult)?);
        r.set("res", res_of_tr(&mult)?);
    }
    if let Some(hi) = a.mu_max {
        let n = a.points.max(2);
        let rows = (0..n)
            .map(|i| {
                let mu = a.mu + (hi - a.mu) * i as f64 / (n - 1) as f64;
                Ok(vec![mu, tf.derivative(mu, a.derivative)?])
            })
            .collect::<Result<_>>()?;
        r.series = Some(Series { columns: vec!["mu".into(), "trace".into()], rows });
    }
    Ok(r)
}

fn thom_check(a: &SeedArgs) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::new();
    let (mut worst, mut all_exact, mut all_dd) = (0.0f64, true, true);
    for c in corpus() {
        let n = c.form.ambient_dim();
        let pts = cone_samples(&mut rng, n, a.samples);
        let defect = homotopy_defect(&c.form, &c.phi, &c.space, &pts)?;
        let mut exact = true;
        for eta in [SphereForm::one(n), SphereForm::monomial(n, vec![1; n], 0b1, 2.0)?] {
            exact &= fiber_integrate(&thom_section(&eta, &c.phi, &c.space)?, &c.space)? == eta;
        }
        let dd = c.form.d()?.d()?.is_zero();
        worst = worst.max(defect);
        all_exact &= exact;
        all_dd &= dd;
        rows.push(json!({ "form": c.name, "homotopy_defect": defect, "section_inverse": exact, "dd_zero": dd }));
    }
    let mut res = 0.0f64;
    for (name, s) in symbol_form_corpus() {
        let v = stokes_property_check(&s)?;
        res = res.max(v.abs());
        rows.push(json!({ "form": name, "res_d": v }));
    }
    let mut r = Report { diagnostics: Value::Array(rows), ..Default::default() };
    r.failed = !(worst < a.tol && all_exact && all_dd && res < a.tol);
    r.set("max_homotopy_defect", worst);
    r.set("section_inverse", all_exact);
    r.set("dd_zero", all_dd);
    r.set("max_res_d", res);
    Ok(r)
}
