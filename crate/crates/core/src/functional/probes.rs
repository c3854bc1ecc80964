use std::str::FromStr;

use super::{line_weights, FracMeasure};
use crate::error::{Error, Result};
use crate::fracgrid::{
    apply_along_axis, build_operator, make_grid, Axis, Field, FieldGrid, FracOperator, Grid2D,
};
use crate::fracops::{gamma, FractionalOrder, OperatorKind};
use crate::jets::{apply_derivative, Orders};
use crate::lagexpr::Func;
use crate::quad::neumaier_sum;
use crate::report::{interior_norms, ProbeReport, ProbeRow, INTERIOR_MARGIN};

/// The outer function `h` of the chain-rule probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outer {
    /// `h(u) = u²/2`
    SquareHalf,
    Unary(Func),
}

impl Outer {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Outer::SquareHalf => 0.5 * u * u,
            Outer::Unary(f) => f.apply(u),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Outer::SquareHalf => u,
            Outer::Unary(f) => f.derivative(u),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outer::SquareHalf => "square_half",
            Outer::Unary(f) => f.name(),
        }
    }
}

impl FromStr for Outer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "square_half" {
            return Ok(Outer::SquareHalf);
        }
        Func::from_name(s)
            .map(Outer::Unary)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown outer function `{s}`")))
    }
}

fn row_from_residual(r: &Field) -> ProbeRow {
    let (l2, max) = interior_norms(r.values(), r.grid(), INTERIOR_MARGIN);
    let g = match r.grid() {
        FieldGrid::Line(g) => *g,
        FieldGrid::Plane(g) => g.t,
    };
    ProbeRow::new(g.n(), g.h(), l2, max)
}

fn derivative_of(op: &FracOperator) -> Result<()> {
    if op.kind() != OperatorKind::Derivative {
        return Err(Error::InvalidArgument(
            "probe needs a derivative operator".into(),
        ));
    }
    Ok(())
}

/// `D(fg) - f·Dg - g·Df` with `D` applied along `axis`.
pub fn leibniz_residual(f: &Field, g: &Field, op: &FracOperator, axis: Axis) -> Result<Field> {
    derivative_of(op)?;
    let fg = f.zip_with(g, |a, b| a * b)?;
    let d_fg = apply_along_axis(op, &fg, axis)?;
    let df = apply_along_axis(op, f, axis)?;
    let dg = apply_along_axis(op, g, axis)?;
    let mut out = d_fg.into_values();
    for (k, v) in out.iter_mut().enumerate() {
        *v -= f.values()[k] * dg.values()[k] + g.values()[k] * df.values()[k];
    }
    Field::new(*f.grid(), out)
}

/// Interior norms of the Leibniz residual of two line fields.
pub fn leibniz_probe(f: &Field, g: &Field, op: &FracOperator) -> Result<ProbeRow> {
    Ok(row_from_residual(&leibniz_residual(f, g, op, Axis::T)?))
}

/// [`leibniz_probe`] over a ladder of resolutions `ns` of `[a, b]`.
pub fn leibniz_ladder(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    alpha: FractionalOrder,
    (a, b): (f64, f64),
    ns: &[usize],
) -> Result<ProbeReport> {
    let rows = ns
        .iter()
        .map(|&n| {
            let grid = make_grid(a, b, n)?;
            let op = build_operator(alpha, OperatorKind::Derivative, grid);
            leibniz_probe(
                &Field::sample_line(grid, &f)?,
                &Field::sample_line(grid, &g)?,
                &op,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::new("leibniz", alpha.value(), None, rows))
}

/// `D(h(u)) - h'(u)·Du` with `D` applied along `axis`.
pub fn chainrule_residual(u: &Field, op: &FracOperator, axis: Axis, outer: Outer) -> Result<Field> {
    derivative_of(op)?;
    let hu = u.map(|v| outer.apply(v))?;
    let d_hu = apply_along_axis(op, &hu, axis)?;
    let du = apply_along_axis(op, u, axis)?;
    let mut out = d_hu.into_values();
    for (k, v) in out.iter_mut().enumerate() {
        *v -= outer.derivative(u.values()[k]) * du.values()[k];
    }
    Field::new(*u.grid(), out)
}

/// Interior norms of the chain-rule residual of a line field.
pub fn chainrule_probe(u: &Field, op: &FracOperator, outer: Outer) -> Result<ProbeRow> {
    Ok(row_from_residual(&chainrule_residual(
        u,
        op,
        Axis::T,
        outer,
    )?))
}

/// [`chainrule_probe`] over a ladder of resolutions `ns` of `[a, b]`.
pub fn chainrule_ladder(
    u: impl Fn(f64) -> f64,
    outer: Outer,
    beta: FractionalOrder,
    (a, b): (f64, f64),
    ns: &[usize],
) -> Result<ProbeReport> {
    let rows = ns
        .iter()
        .map(|&n| {
            let grid = make_grid(a, b, n)?;
            let op = build_operator(beta, OperatorKind::Derivative, grid);
            chainrule_probe(&Field::sample_line(grid, &u)?, &op, outer)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::new(
        &format!("chain:{}", outer.name()),
        beta.value(),
        None,
        rows,
    ))
}

// `Σ w_i v_i` along one edge, including the `1/Γ(1+order)` prefactor.
fn edge_integral(order: FractionalOrder, grid: &crate::fracgrid::Grid1D, v: &[f64]) -> f64 {
    let w = line_weights(order, grid);
    let pre = 1.0 / gamma(1.0 + order.value()).expect("1+α is positive");
    pre * neumaier_sum(w.iter().zip(v).map(|(w, v)| w * v))
}

/// Both sides of the fractional Green identity on the rectangle of
/// `measure`:
///
/// ```text
/// lhs = 1/(Γ(1+α)Γ(1+β)) ∬ (D_t^α Q - D_x^β P) (dt)^α (dx)^β
/// rhs = 1/Γ(1+β) ∮ Q (dx)^β + 1/Γ(1+α) ∮ P (dt)^α
/// ```
///
/// with the boundary traversed counterclockwise in the `(t, x)` plane.
/// The row's norms are `|lhs - rhs|`.
pub fn green_probe(p: &Field, q: &Field, measure: &FracMeasure) -> Result<ProbeRow> {
    p.require_same_grid(q)?;
    if p.grid() != measure.grid() {
        return Err(Error::GridMismatch(
            "fields do not match the measure grid".into(),
        ));
    }
    let g = *p.plane_grid()?;
    let orders = measure.orders();
    let dq = apply_derivative(orders, q, Axis::T, 1)?;
    let dp = apply_derivative(orders, p, Axis::X, 1)?;
    let integrand = dq.zip_with(&dp, |a, b| a - b)?;
    let lhs = measure.integrate(integrand.values())?;

    let (nt, nx) = (g.t.n(), g.x.n());
    let row = |f: &Field, i: usize| -> Vec<f64> { (0..=nx).map(|j| f.at(i, j)).collect() };
    let col = |f: &Field, j: usize| -> Vec<f64> { (0..=nt).map(|i| f.at(i, j)).collect() };
    let q_edges = edge_integral(orders.beta, &g.x, &row(q, nt))
        - edge_integral(orders.beta, &g.x, &row(q, 0));
    let p_edges = edge_integral(orders.alpha, &g.t, &col(p, 0))
        - edge_integral(orders.alpha, &g.t, &col(p, nx));
    let rhs = q_edges + p_edges;
    let gap = lhs - rhs;
    Ok(ProbeRow::new(nt, g.t.h(), gap.abs(), gap.abs())
        .with("lhs", lhs)
        .with("rhs", rhs)
        .with("gap", gap))
}

/// [`green_probe`] for `P(t, x)` and `Q(t, x)` on `[a,b]×[c,d]` with `n`
/// cells per axis for each `n` in `ns`.
pub fn green_ladder(
    p: impl Fn(f64, f64) -> f64,
    q: impl Fn(f64, f64) -> f64,
    orders: Orders,
    rect: [f64; 4],
    ns: &[usize],
) -> Result<ProbeReport> {
    let [a, b, c, d] = rect;
    let rows = ns
        .iter()
        .map(|&n| {
            let g = Grid2D::new(make_grid(a, b, n)?, make_grid(c, d, n)?);
            let m = FracMeasure::new(orders, FieldGrid::Plane(g));
            green_probe(
                &Field::sample_plane(g, &p)?,
                &Field::sample_plane(g, &q)?,
                &m,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::new(
        "green",
        orders.alpha.value(),
        Some(orders.beta.value()),
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    #[test]
    fn leibniz_with_a_constant_factor() {
        let grid = make_grid(0.0, 1.0, 128).unwrap();
        let op = build_operator(ord(0.5), OperatorKind::Derivative, grid);
        let c = Field::constant(grid, 2.5).unwrap();
        let g = Field::sample_line(grid, |x| x.sin() + x * x).unwrap();
        let row = leibniz_probe(&c, &g, &op).unwrap();
        assert!(row.max <= 1e-10, "{row:?}");
    }

    #[test]
    fn classical_product_and_chain_rules_are_first_order() {
        let r =
            leibniz_ladder(|x| x.exp(), |x| x.sin(), ord(1.0), (0.0, 1.0), &[128, 256]).unwrap();
        assert!((r.observed_order.unwrap() - 1.0).abs() < 0.1, "{r:?}");
        let r = chainrule_ladder(
            |x| x.cos(),
            Outer::SquareHalf,
            ord(1.0),
            (0.0, 1.0),
            &[128, 256],
        )
        .unwrap();
        assert!((r.observed_order.unwrap() - 1.0).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn constant_fields_satisfy_the_chain_rule() {
        let grid = make_grid(0.0, 1.0, 64).unwrap();
        let op = build_operator(ord(0.3), OperatorKind::Derivative, grid);
        let u = Field::constant(grid, -0.7).unwrap();
        for outer in [Outer::SquareHalf, Outer::Unary(Func::Exp)] {
            assert!(chainrule_probe(&u, &op, outer).unwrap().max <= 1e-10);
        }
    }

    #[test]
    fn classical_green_theorem() {
        let o = Orders::new(ord(1.0), ord(1.0));
        let r = green_ladder(
            |t, x| -x * x * t,
            |t, x| t * x + t.sin(),
            o,
            [0.0, 1.0, 0.0, 2.0],
            &[32, 64, 128],
        )
        .unwrap();
        assert!((r.observed_order.unwrap() - 1.0).abs() < 0.15, "{r:?}");
    }

    #[test]
    fn constants_have_no_interior_term() {
        let g = Grid2D::new(
            make_grid(0.0, 1.0, 16).unwrap(),
            make_grid(0.0, 1.0, 16).unwrap(),
        );
        let m = FracMeasure::plane(ord(0.5), ord(0.5), g);
        let c = Field::constant(g, 3.0).unwrap();
        let row = green_probe(&c, &c, &m).unwrap();
        assert_eq!(row.values["lhs"], 0.0);
    }
}
