//! Finite asymptotic expansions `Σ c_{e,l} x^e log^l x + O(x^{remainder})`.

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Exponents are snapped to a 1e-12 grid so that values computed along
/// different routes land on the same key.
pub fn snap(e: f64) -> f64 {
    if !e.is_finite() {
        return e;
    }
    let r = (e * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

type Key = (OrderedFloat<f64>, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticExpansion {
    variable: String,
    entries: BTreeMap<Key, f64>,
    remainder_order: f64,
}

impl AsymptoticExpansion {
    pub fn new(variable: &str, remainder_order: f64) -> Self {
        Self { variable: variable.to_string(), entries: BTreeMap::new(), remainder_order }
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn remainder_order(&self) -> f64 {
        self.remainder_order
    }

    pub fn set_remainder_order(&mut self, r: f64) {
        self.remainder_order = r;
    }

    /// Adds `c` to the coefficient of `x^e log^l x`.
    pub fn add(&mut self, e: f64, l: u32, c: f64) {
        let key = (OrderedFloat(snap(e)), l);
        *self.entries.entry(key).or_insert(0.0) += c;
    }

    pub fn get(&self, e: f64, l: u32) -> f64 {
        self.entries.get(&(OrderedFloat(snap(e)), l)).copied().unwrap_or(0.0)
    }

    /// Whether an entry was ever created for this key (structural presence).
    pub fn contains(&self, e: f64, l: u32) -> bool {
        self.entries.contains_key(&(OrderedFloat(snap(e)), l))
    }

    pub fn constant(&self) -> f64 {
        self.get(0.0, 0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by decreasing exponent, then decreasing log power.
    pub fn entries(&self) -> Vec<(f64, u32, f64)> {
        self.entries.iter().rev().map(|((e, l), c)| (e.0, *l, *c)).collect()
    }

    /// Entries with |c| above `eps`, in the order of [`entries`](Self::entries).
    pub fn nonzero_entries(&self, eps: f64) -> Vec<(f64, u32, f64)> {
        self.entries().into_iter().filter(|(_, _, c)| c.abs() > eps).collect()
    }

    pub fn max_logpow(&self) -> u32 {
        self.entries.keys().map(|(_, l)| *l).max().unwrap_or(0)
    }

    /// Keeps the first `n` entries; the remainder order becomes the exponent
    /// of the first dropped entry.
    pub fn truncated(&self, n: usize) -> Self {
        let all = self.entries();
        let mut out = Self::new(&self.variable, self.remainder_order);
        for (e, l, c) in all.iter().take(n) {
            out.add(*e, *l, *c);
        }
        if let Some((e, _, _)) = all.get(n) {
            out.remainder_order = *e;
        }
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        let lx = x.ln();
        let mut acc = crate::sum::Neumaier::new();
        for ((e, l), c) in &self.entries {
            acc.add(c * x.powf(e.0) * lx.powi(*l as i32));
        }
        acc.value()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add_expansion(&mut self, other: &AsymptoticExpansion, weight: f64) {
        for ((e, l), c) in &other.entries {
            self.add(e.0, *l, weight * c);
        }
        self.remainder_order = self.remainder_order.max(other.remainder_order);
    }

    /// Removes entries whose coefficient is exactly zero.
    pub fn drop_zeros(&mut self) {
        self.entries.retain(|_, c| *c != 0.0);
    }

    pub fn retain<F: FnMut(f64, u32, f64) -> bool>(&mut self, mut keep: F) {
        self.entries.retain(|(e, l), c| keep(e.0, *l, *c));
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries()
            .into_iter()
            .map(|(e, l, c)| json!({"exponent": fmt_f64(e), "logpow": l, "coefficient": fmt_f64(c)}))
            .collect();
        json!({
            "variable": self.variable,
            "entries": entries,
            "remainder-order": fmt_f64(self.remainder_order),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("asymptotic expansion: {m}"));
        let variable = v.get("variable").and_then(Value::as_str).ok_or_else(|| bad("missing variable"))?;
        let rem = parse_f64(v.get("remainder-order").ok_or_else(|| bad("missing remainder-order"))?)?;
        let mut out = Self::new(variable, rem);
        for ent in v.get("entries").and_then(Value::as_array).ok_or_else(|| bad("missing entries"))? {
            let e = parse_f64(ent.get("exponent").ok_or_else(|| bad("missing exponent"))?)?;
            let l = ent.get("logpow").and_then(Value::as_u64).ok_or_else(|| bad("missing logpow"))? as u32;
            let c = parse_f64(ent.get("coefficient").ok_or_else(|| bad("missing coefficient"))?)?;
            out.add(e, l, c);
        }
        Ok(out)
    }
}

/// Decimal string with 17 significant digits; infinities as "inf"/"-inf".
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Accepts numbers or decimal strings (including "inf"/"-inf").
pub fn parse_f64(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::InvalidInput(format!("not a float: {n}"))),
        Value::String(s) => s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("not a float: {s:?}"))),
        other => Err(Error::InvalidInput(format!("expected a number, found {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_by_key() {
        let mut a = AsymptoticExpansion::new("R", -3.0);
        a.add(-1.0, 0, 1.0);
        a.add(-1.0 + 1e-15, 0, 2.0);
        a.add(0.0, 1, 5.0);
        assert_eq!(a.len(), 2);
        assert_eq!(a.get(-1.0, 0), 3.0);
        assert_eq!(a.entries()[0], (0.0, 1, 5.0));
        let t = a.truncated(1);
        assert_eq!(t.remainder_order(), -1.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut a = AsymptoticExpansion::new("lambda", -5.0);
        a.add(-2.0, 0, 2.0);
        a.add(-3.0, 0, -std::f64::consts::PI);
        a.add(-1.0 / 3.0, 1, 0.1 + 0.2);
        let b = AsymptoticExpansion::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        let z = AsymptoticExpansion::new("x", f64::NEG_INFINITY);
        assert_eq!(AsymptoticExpansion::from_json(&z.to_json()).unwrap(), z);
    }
}
