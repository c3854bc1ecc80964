//! Fractional Euler-Lagrange residuals on sampled fields, the exact gradient
//! of the discretized action, and the gap between the two.
//!
//! For a density `L` in the jet variables of `y` the residual is
//!
//! ```text
//! ∂L/∂y + Σ_m (-1)^m D_t^(mα) ∂L/∂(D_t^(mα) y) + Σ_n (-1)^n D_x^(nβ) ∂L/∂(D_x^(nβ) y)
//! ```
//!
//! with left-sided outer derivatives. The discrete gradient instead
//! differentiates the quadrature sum `Σ w_k L_k` exactly, so its operator
//! terms are transposes. The two agree at α = β = 1 up to O(h); at
//! fractional orders their gap is what [`el_discrepancy_probe`] measures.

use crate::error::{Error, Result};
use crate::fracgrid::{Field, FieldGrid};
use crate::fracops::FractionalOrder;
use crate::functional::FracMeasure;
use crate::jets::{apply_derivative, apply_derivative_adjoint, FieldSet, JetTable, Orders};
use crate::lagexpr::{partial_jet, Axis, Expr, JetVar};
use crate::report::{interior_norms, ProbeReport, ProbeRow, INTERIOR_MARGIN};

/// A Lagrangian density together with the fields and orders it is
/// evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct ELProblem {
    lagrangian: Expr,
    fields: FieldSet,
    orders: Orders,
    grid: FieldGrid,
}

impl ELProblem {
    pub fn new(
        lagrangian: Expr,
        fields: FieldSet,
        alpha: FractionalOrder,
        beta: FractionalOrder,
    ) -> Result<Self> {
        let grid = fields.grid()?;
        for v in lagrangian.jet_vars() {
            let is_param = v.is_field() && fields.param(&v.field).is_some();
            if !is_param && fields.field(&v.field).is_none() {
                return Err(Error::Unbound(v.to_string()));
            }
            if let Some(axis) = v.axis {
                grid.axis(axis)?;
            }
        }
        if lagrangian.uses_coord(Axis::X) {
            grid.axis(Axis::X)?;
        }
        Ok(ELProblem {
            lagrangian,
            fields,
            orders: Orders::new(alpha, beta),
            grid,
        })
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn fields(&self) -> &FieldSet {
        &self.fields
    }

    pub fn orders(&self) -> Orders {
        self.orders
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    /// The quadrature measure of the discretized action.
    pub fn measure(&self) -> FracMeasure {
        FracMeasure::new(self.orders, self.grid)
    }

    /// The same problem with `name` replaced.
    pub fn with_field(&self, name: &str, f: Field) -> Result<Self> {
        let mut fields = self.fields.clone();
        fields.insert_field(name, f);
        Self::new(
            self.lagrangian.clone(),
            fields,
            self.orders.alpha,
            self.orders.beta,
        )
    }
}

// `∂L/∂v` sampled at every node, for each jet variable `v` of field `wrt`.
fn partials(p: &ELProblem, wrt: &str) -> Result<Vec<(JetVar, Field)>> {
    if p.fields.field(wrt).is_none() {
        return Err(Error::Unbound(wrt.to_string()));
    }
    let vars = p.lagrangian.jet_vars();
    let table = JetTable::on_grid(p.grid, &p.fields, p.orders, &vars)?;
    vars.iter()
        .filter(|v| v.field == wrt)
        .map(|v| {
            let d = partial_jet(&p.lagrangian, v);
            Ok((v.clone(), table.eval_field(&d, &p.fields)?))
        })
        .collect()
}

fn accumulate(acc: &mut [f64], f: &Field, sign: f64) {
    for (a, v) in acc.iter_mut().zip(f.values()) {
        *a += sign * v;
    }
}

/// The Euler-Lagrange residual with respect to field `wrt`.
pub fn el_residual(p: &ELProblem, wrt: &str) -> Result<Field> {
    let mut acc = vec![0.0; p.grid.len()];
    for (v, dl) in partials(p, wrt)? {
        match v.axis {
            None => accumulate(&mut acc, &dl, 1.0),
            Some(axis) => {
                let m = v.multiplicity;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                accumulate(&mut acc, &apply_derivative(p.orders, &dl, axis, m)?, sign);
            }
        }
    }
    Field::new(p.grid, acc)
}

/// Gradient of the discretized action `Σ w_k L_k` with respect to the
/// samples of `wrt`, with entries where `boundary_mask` is set forced to 0.
pub fn discrete_gradient(p: &ELProblem, wrt: &str, boundary_mask: &[bool]) -> Result<Field> {
    if boundary_mask.len() != p.grid.len() {
        return Err(Error::GridMismatch(
            "boundary mask does not match the grid".into(),
        ));
    }
    let measure = p.measure();
    let w = measure.weights();
    let mut acc = vec![0.0; p.grid.len()];
    for (v, dl) in partials(p, wrt)? {
        let weighted = Field::new(
            p.grid,
            dl.values().iter().zip(w).map(|(a, b)| a * b).collect(),
        )?;
        match v.axis {
            None => accumulate(&mut acc, &weighted, 1.0),
            Some(axis) => {
                let back = apply_derivative_adjoint(p.orders, &weighted, axis, v.multiplicity)?;
                accumulate(&mut acc, &back, 1.0);
            }
        }
    }
    for (a, on_boundary) in acc.iter_mut().zip(boundary_mask) {
        if *on_boundary {
            *a = 0.0;
        }
    }
    Field::new(p.grid, acc)
}

/// Relative interior discrepancy between the residual and the discrete
/// gradient divided by the quadrature weights.
///
/// `l2` and `max` are relative to the residual's own norms (absolute when
/// the residual vanishes); the absolute norms are kept in `values`.
pub fn el_discrepancy(p: &ELProblem, wrt: &str) -> Result<ProbeRow> {
    let r = el_residual(p, wrt)?;
    let g = discrete_gradient(p, wrt, &p.grid.boundary_mask())?;
    let measure = p.measure();
    let diff: Vec<f64> = g
        .values()
        .iter()
        .zip(measure.weights())
        .zip(r.values())
        .map(|((g, w), r)| g / w - r)
        .collect();
    let (abs_l2, abs_max) = interior_norms(&diff, &p.grid, INTERIOR_MARGIN);
    let (res_l2, res_max) = interior_norms(r.values(), &p.grid, INTERIOR_MARGIN);
    let rel = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    let axis = p.grid.axis(Axis::T)?;
    Ok(ProbeRow::new(
        axis.n(),
        axis.h(),
        rel(abs_l2, res_l2),
        rel(abs_max, res_max),
    )
    .with("abs_l2", abs_l2)
    .with("abs_max", abs_max)
    .with("residual_l2", res_l2))
}

/// [`el_discrepancy`] over a ladder of problems built by `build(n)`.
pub fn el_discrepancy_probe(
    build: impl Fn(usize) -> Result<ELProblem>,
    wrt: &str,
    ns: &[usize],
) -> Result<ProbeReport> {
    let mut rows = Vec::with_capacity(ns.len());
    let mut orders = None;
    for &n in ns {
        let p = build(n)?;
        orders = Some((p.orders, matches!(p.grid, FieldGrid::Plane(_))));
        rows.push(el_discrepancy(&p, wrt)?);
    }
    let (o, plane) = orders.ok_or_else(|| Error::InvalidArgument("empty ladder".into()))?;
    Ok(ProbeReport::new(
        "el-discrepancy",
        o.alpha.value(),
        plane.then_some(o.beta.value()),
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracgrid::{make_grid, Grid2D};
    use crate::functional::{eval_functional, first_variation, Perturbation};
    use crate::lagexpr::parse;

    fn ord(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    fn line_problem(l: &str, a: f64, n: usize, y: impl Fn(f64) -> f64) -> ELProblem {
        let g = make_grid(0.0, 1.0, n).unwrap();
        let set = FieldSet::new().with_field("y", Field::sample_line(g, y).unwrap());
        ELProblem::new(parse(l).unwrap(), set, ord(a), ord(a)).unwrap()
    }

    #[test]
    fn pendulum_residual_structure() {
        let p = line_problem("D[y,t,1]^2/2 + cos(y)", 0.5, 64, |t| t.sin() + 0.3 * t);
        let r = el_residual(&p, "y").unwrap();
        let y = p.fields().field("y").unwrap();
        let d2 = apply_derivative(p.orders(), y, Axis::T, 2).unwrap();
        for k in 0..r.len() {
            let want = -y.values()[k].sin() - d2.values()[k];
            assert!((r.values()[k] - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn classical_second_derivative() {
        let p = line_problem("D[y,t,1]^2/2", 1.0, 1024, |t| t * t);
        let r = el_residual(&p, "y").unwrap();
        let mask = p.grid().interior_mask(2);
        for (v, inside) in r.values().iter().zip(mask) {
            if inside {
                assert!((v + 2.0).abs() < 5e-2, "{v}");
            }
        }
    }

    #[test]
    fn derivative_free_density() {
        let p = line_problem("y^2/2", 0.4, 32, |t| t.exp());
        assert_eq!(
            el_residual(&p, "y").unwrap(),
            *p.fields().field("y").unwrap()
        );
        let row = el_discrepancy(&p, "y").unwrap();
        assert!(row.max <= 1e-12);
    }

    #[test]
    fn quadratic_gradient_is_weighted_field() {
        let g = Grid2D::new(
            make_grid(0.0, 1.0, 8).unwrap(),
            make_grid(0.0, 1.0, 8).unwrap(),
        );
        let y = Field::sample_plane(g, |t, x| t - x * x).unwrap();
        let p = ELProblem::new(
            parse("y^2/2").unwrap(),
            FieldSet::new().with_field("y", y.clone()),
            ord(1.0),
            ord(1.0),
        )
        .unwrap();
        let mask = p.grid().boundary_mask();
        let grad = discrete_gradient(&p, "y", &mask).unwrap();
        let w = p.measure();
        for (k, &edge) in mask.iter().enumerate() {
            let want = if edge {
                0.0
            } else {
                w.weights()[k] * y.values()[k]
            };
            assert!((grad.values()[k] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Grid2D::new(
            make_grid(0.0, 1.0, 12).unwrap(),
            make_grid(0.0, 1.0, 10).unwrap(),
        );
        let y = Field::sample_plane(g, |t, x| (t + 2.0 * x).sin() + t * x).unwrap();
        let l = parse("D[y,t,1]^2/2 - D[y,x,1]^2/2 + cos(y) + y*D[y,x,2]").unwrap();
        let p = ELProblem::new(
            l.clone(),
            FieldSet::new().with_field("y", y.clone()),
            ord(0.6),
            ord(0.8),
        )
        .unwrap();
        let mask = p.grid().boundary_mask();
        let grad = discrete_gradient(&p, "y", &mask).unwrap();
        let eta = Field::sample_plane(g, |t, x| {
            (t * (1.0 - t) * x * (1.0 - x)) * (3.0 * x + t).cos()
        })
        .unwrap();
        let eta = Field::new(
            g,
            eta.values()
                .iter()
                .zip(&mask)
                .map(|(v, m)| if *m { 0.0 } else { *v })
                .collect(),
        )
        .unwrap();
        let pert = Perturbation::scaled_to(eta.clone(), &y).unwrap();
        let fd = first_variation(&l, p.fields(), &p.measure(), &pert, "y").unwrap();
        let an = grad.dot(&eta).unwrap();
        assert!(
            (fd - an).abs() <= 1e-6 * an.abs().max(1e-12),
            "{fd} vs {an}"
        );
        assert!(eval_functional(&l, p.fields(), &p.measure())
            .unwrap()
            .is_finite());
    }

    #[test]
    fn classical_discrepancy_is_first_order() {
        let build = |n: usize| {
            let g = Grid2D::new(
                make_grid(0.0, 1.0, n).unwrap(),
                make_grid(0.0, 1.0, n).unwrap(),
            );
            let y = Field::sample_plane(g, |t, x| (t + 2.0 * x).sin() + t.exp() * x)?;
            ELProblem::new(
                parse("D[y,t,1]^2/2 - D[y,x,1]^2/2 + cos(y)").unwrap(),
                FieldSet::new().with_field("y", y),
                ord(1.0),
                ord(1.0),
            )
        };
        let r = el_discrepancy_probe(build, "y", &[32, 64, 128]).unwrap();
        assert!((r.observed_order.unwrap() - 1.0).abs() < 0.2, "{r:?}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let p = line_problem("y^2", 0.5, 8, |t| t);
        assert!(matches!(el_residual(&p, "z"), Err(Error::Unbound(_))));
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let set = FieldSet::new().with_field("y", Field::zeros(g));
        assert!(
            ELProblem::new(parse("D[y,x,1]").unwrap(), set.clone(), ord(0.5), ord(0.5)).is_err()
        );
        assert!(ELProblem::new(parse("q*y").unwrap(), set, ord(0.5), ord(0.5)).is_err());
    }
}
