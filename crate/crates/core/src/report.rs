//! Resolution-ladder reports produced by the probes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fracgrid::FieldGrid;

/// Value of the `schema` key of every JSON report.
pub const SCHEMA: &str = "fravar-report/1";

/// Interior cells skipped on each side when forming probe norms.
pub const INTERIOR_MARGIN: usize = 2;

/// One resolution of a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    /// Cells per axis.
    pub n: usize,
    pub h: f64,
    /// Root-mean-square of the measured quantity over interior nodes.
    pub l2: f64,
    pub max: f64,
    /// Probe-specific extras (e.g. `lhs`, `rhs` for the Green probe).
    pub values: BTreeMap<String, f64>,
}

impl ProbeRow {
    pub fn new(n: usize, h: f64, l2: f64, max: f64) -> Self {
        ProbeRow {
            n,
            h,
            l2,
            max,
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub schema: String,
    pub probe: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub rows: Vec<ProbeRow>,
    /// `log(e_coarse / e_fine) / log(h_coarse / h_fine)` from the last two
    /// rows, when both errors are resolvable.
    pub observed_order: Option<f64>,
}

impl ProbeReport {
    pub fn new(probe: &str, alpha: f64, beta: Option<f64>, rows: Vec<ProbeRow>) -> Self {
        let observed_order = observed_order(&rows);
        ProbeReport {
            schema: SCHEMA.to_string(),
            probe: probe.to_string(),
            alpha,
            beta,
            rows,
            observed_order,
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn observed_order(rows: &[ProbeRow]) -> Option<f64> {
    let [.., c, f] = rows else { return None };
    let floor = 1e-14;
    if c.l2 <= floor || f.l2 <= floor || c.h == f.h {
        return None;
    }
    Some((c.l2 / f.l2).ln() / (c.h / f.h).ln())
}

/// RMS and max of `|r|` over nodes at least `margin` cells from the boundary.
pub fn interior_norms(r: &[f64], grid: &FieldGrid, margin: usize) -> (f64, f64) {
    let mask = grid.interior_mask(margin);
    let (mut ss, mut max, mut count) = (crate::quad::Neumaier::default(), 0.0f64, 0usize);
    for (v, inside) in r.iter().zip(mask) {
        if inside {
            ss.add(v * v);
            max = max.max(v.abs());
            count += 1;
        }
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    ((ss.sum() / count as f64).sqrt(), max)
}

fn expect<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::InvalidArgument(format!("report is missing `{key}`")))
}

fn finite_number(v: &Value, key: &str) -> Result<f64> {
    let x = expect(v, key)?
        .as_f64()
        .ok_or_else(|| Error::InvalidArgument(format!("`{key}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("`{key}` is not finite")));
    }
    Ok(x)
}

/// Check a probe report against the `fravar-report/1` layout.
pub fn validate_probe_report(v: &Value) -> Result<()> {
    if expect(v, "schema")?.as_str() != Some(SCHEMA) {
        return Err(Error::InvalidArgument(format!("schema is not `{SCHEMA}`")));
    }
    if !expect(v, "probe")?.is_string() {
        return Err(Error::InvalidArgument("`probe` is not a string".into()));
    }
    let alpha = finite_number(v, "alpha")?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument("`alpha` outside (0, 1]".into()));
    }
    match expect(v, "beta")? {
        Value::Null => {}
        _ => {
            let beta = finite_number(v, "beta")?;
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::InvalidArgument("`beta` outside (0, 1]".into()));
            }
        }
    }
    let rows = expect(v, "rows")?
        .as_array()
        .ok_or_else(|| Error::InvalidArgument("`rows` is not an array".into()))?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("`rows` is empty".into()));
    }
    let mut last_n = 0;
    for row in rows {
        let n = expect(row, "n")?
            .as_u64()
            .ok_or_else(|| Error::InvalidArgument("`n` is not an integer".into()))?;
        if n as usize <= last_n {
            return Err(Error::InvalidArgument(
                "rows are not increasing in `n`".into(),
            ));
        }
        last_n = n as usize;
        for key in ["h", "l2", "max"] {
            if finite_number(row, key)? < 0.0 {
                return Err(Error::InvalidArgument(format!("`{key}` is negative")));
            }
        }
        let values = expect(row, "values")?
            .as_object()
            .ok_or_else(|| Error::InvalidArgument("`values` is not an object".into()))?;
        for key in values.keys() {
            finite_number(&Value::Object(values.clone()), key)?;
        }
    }
    match expect(v, "observed_order")? {
        Value::Null => Ok(()),
        _ => finite_number(v, "observed_order").map(|_| ()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracgrid::make_grid;

    #[test]
    fn order_from_last_two_rows() {
        let rows = vec![
            ProbeRow::new(16, 1.0 / 16.0, 0.4, 0.8),
            ProbeRow::new(32, 1.0 / 32.0, 0.2, 0.4),
        ];
        let r = ProbeReport::new("leibniz", 1.0, None, rows);
        assert!((r.observed_order.unwrap() - 1.0).abs() < 1e-12);
        validate_probe_report(&r.to_json()).unwrap();
    }

    #[test]
    fn rejects_malformed() {
        let r = ProbeReport::new(
            "green",
            0.5,
            Some(0.5),
            vec![ProbeRow::new(8, 0.125, 0.0, 0.0)],
        );
        let mut v = r.to_json();
        validate_probe_report(&v).unwrap();
        v["schema"] = Value::from("other");
        assert!(validate_probe_report(&v).is_err());
        let mut v = r.to_json();
        v["rows"] = Value::Array(vec![]);
        assert!(validate_probe_report(&v).is_err());
    }

    #[test]
    fn norms_skip_the_margin() {
        let g = FieldGrid::Line(make_grid(0.0, 1.0, 6).unwrap());
        let r = [100.0, 100.0, 3.0, -4.0, 3.0, 100.0, 100.0];
        let (l2, max) = interior_norms(&r, &g, 2);
        assert_eq!(max, 4.0);
        assert!((l2 - (34.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
