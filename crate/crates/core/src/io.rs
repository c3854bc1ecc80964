//! The `fravar-field v1` CSV format and fixed-precision JSON rendering.
//!
//! ```text
//! # fravar-field v1, axes=2, a=0, b=1, n=4, c=0, d=2, m=8, alpha=0.5, beta=na
//! t,x,value
//! 0.0000000000000000e0,0.0000000000000000e0,1.2500000000000000e0
//! ...
//! ```
//!
//! Rows are row-major in `t`. A 1D field has `axes=1`, no `c, d, m` keys and
//! an `x,value` column header.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::{Number, Value};

use crate::error::{Error, Result};
use crate::fracgrid::{Field, FieldGrid, Grid1D, Grid2D};

const MAGIC: &str = "# fravar-field v1";

/// A field read from CSV with the orders recorded in its header.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: Field,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// `x` with `digits` significant digits, shortest fixed notation for
/// moderate exponents and scientific otherwise. Trailing zeros are trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0.0".into()
        } else {
            "0.0".into()
        };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_fraction(&s)
    } else {
        format!("{}e{}", trim_fraction(mant), exp)
    }
}

fn trim_fraction(s: &str) -> String {
    if !s.contains('.') {
        return format!("{s}.0");
    }
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

/// Replace every non-integer number by its 17-significant-digit rendering.
pub fn fix_precision(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.as_i64().is_none() && n.as_u64().is_none() => {
            let x = n.as_f64().expect("finite JSON number");
            Value::Number(Number::from_str(&format_sig(x, 17)).expect("valid number"))
        }
        Value::Array(a) => Value::Array(a.iter().map(fix_precision).collect()),
        Value::Object(o) => Value::Object(
            o.iter()
                .map(|(k, v)| (k.clone(), fix_precision(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

/// Pretty JSON with 17 significant digits and sorted keys, newline-terminated.
pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&fix_precision(v)).expect("JSON value serializes");
    s.push('\n');
    s
}

fn order_text(o: Option<f64>) -> String {
    o.map_or_else(|| "na".to_string(), |v| v.to_string())
}

/// Serialize `f` as `fravar-field v1` CSV.
pub fn write_field(f: &Field, alpha: Option<f64>, beta: Option<f64>) -> String {
    let mut out = String::new();
    match f.grid() {
        FieldGrid::Line(g) => {
            out.push_str(&format!(
                "{MAGIC}, axes=1, a={}, b={}, n={}, alpha={}, beta={}\nx,value\n",
                g.a(),
                g.b(),
                g.n(),
                order_text(alpha),
                order_text(beta)
            ));
            for (i, v) in f.values().iter().enumerate() {
                out.push_str(&format!("{:.16e},{:.16e}\n", g.node(i), v));
            }
        }
        FieldGrid::Plane(g) => {
            out.push_str(&format!(
                "{MAGIC}, axes=2, a={}, b={}, n={}, c={}, d={}, m={}, alpha={}, beta={}\nt,x,value\n",
                g.t.a(),
                g.t.b(),
                g.t.n(),
                g.x.a(),
                g.x.b(),
                g.x.n(),
                order_text(alpha),
                order_text(beta)
            ));
            for i in 0..g.t.len() {
                for j in 0..g.x.len() {
                    out.push_str(&format!(
                        "{:.16e},{:.16e},{:.16e}\n",
                        g.t.node(i),
                        g.x.node(j),
                        f.at(i, j)
                    ));
                }
            }
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::FieldFormat(msg.into())
}

fn parse_header(line: &str) -> Result<BTreeMap<String, String>> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad(format!("first line must start with `{MAGIC}`")))?;
    let mut keys = BTreeMap::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("header entry `{part}` is not key=value")))?;
        keys.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(keys)
}

fn key<T: FromStr>(keys: &BTreeMap<String, String>, k: &str) -> Result<T> {
    keys.get(k)
        .ok_or_else(|| bad(format!("header is missing `{k}`")))?
        .parse()
        .map_err(|_| bad(format!("header value for `{k}` is malformed")))
}

fn order_key(keys: &BTreeMap<String, String>, k: &str) -> Result<Option<f64>> {
    match keys.get(k).map(String::as_str) {
        None | Some("na") => Ok(None),
        Some(_) => key::<f64>(keys, k).map(Some),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Parse `fravar-field v1` CSV.
pub fn read_field(text: &str) -> Result<FieldFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad("empty field file"))?;
    let keys = parse_header(header)?;
    let axes: usize = key(&keys, "axes")?;
    let t = Grid1D::new(key(&keys, "a")?, key(&keys, "b")?, key(&keys, "n")?)?;
    let grid = match axes {
        1 => FieldGrid::Line(t),
        2 => FieldGrid::Plane(Grid2D::new(
            t,
            Grid1D::new(key(&keys, "c")?, key(&keys, "d")?, key(&keys, "m")?)?,
        )),
        other => return Err(bad(format!("axes must be 1 or 2, got {other}"))),
    };
    let want_cols = if axes == 1 { "x,value" } else { "t,x,value" };
    match lines.next() {
        Some((_, l)) if l.trim() == want_cols => {}
        _ => return Err(bad(format!("expected column header `{want_cols}`"))),
    }
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, l) in lines {
        let cells: Vec<f64> = l
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("line {}: malformed number", lineno + 1)))?;
        if cells.len() != axes + 1 {
            return Err(bad(format!(
                "line {}: expected {} columns",
                lineno + 1,
                axes + 1
            )));
        }
        let k = values.len();
        if k >= grid.len() {
            return Err(bad("more rows than grid nodes"));
        }
        let (ct, cx) = grid.coords(k);
        let coords_ok = match cx {
            None => close(cells[0], ct),
            Some(x) => close(cells[0], ct) && close(cells[1], x),
        };
        if !coords_ok {
            return Err(bad(format!(
                "line {}: coordinates do not match the grid",
                lineno + 1
            )));
        }
        values.push(cells[axes]);
    }
    if values.len() != grid.len() {
        return Err(bad(format!(
            "expected {} rows, found {}",
            grid.len(),
            values.len()
        )));
    }
    Ok(FieldFile {
        field: Field::new(grid, values)?,
        alpha: order_key(&keys, "alpha")?,
        beta: order_key(&keys, "beta")?,
    })
}
