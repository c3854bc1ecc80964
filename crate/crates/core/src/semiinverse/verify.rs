use serde::{Deserialize, Serialize};

use super::SystemFixture;
use crate::error::{Error, Result};
use crate::eulagrange::{el_residual, ELProblem};
use crate::fracgrid::{apply_along_axis, build_operator, Axis, Field, FieldGrid};
use crate::fracops::{gamma, FractionalOrder, OperatorKind};
use crate::functional::{eval_functional, FracMeasure};
use crate::jets::{apply_derivative, eval_pointwise, FieldSet};
use crate::report::{interior_norms, INTERIOR_MARGIN};

/// A potential `φ` with `D^β φ ≈ u` along `x` (along the single axis of a
/// line field) and `φ = 0` at the lower end of every line.
///
/// The first sample `u₀` of each line is integrated exactly,
/// `u₀ (x-a)^β / Γ(1+β)`, and the remainder with the discrete integral.
pub fn potential_from_field(u: &Field, beta: FractionalOrder) -> Result<Field> {
    let (axis, line) = match u.grid() {
        FieldGrid::Line(g) => (Axis::T, *g),
        FieldGrid::Plane(g) => (Axis::X, g.x),
    };
    let width = line.len();
    let lines = u.len() / width;
    let at = |l: usize, j: usize| match axis {
        Axis::T => j,
        Axis::X => l * width + j,
    };
    let mut first = vec![0.0; lines];
    let mut rest = u.values().to_vec();
    for (l, f) in first.iter_mut().enumerate() {
        *f = u.values()[at(l, 0)];
        for j in 0..width {
            rest[at(l, j)] -= *f;
        }
    }
    let op = build_operator(beta, OperatorKind::Integral, line);
    let mut phi = apply_along_axis(&op, &Field::new(*u.grid(), rest)?, axis)?.into_values();
    let b = beta.value();
    let g = gamma(1.0 + b)?;
    for (l, f) in first.iter().enumerate() {
        for j in 0..width {
            phi[at(l, j)] += f * (line.node(j) - line.a()).powf(b) / g;
        }
    }
    Field::new(*u.grid(), phi)
}

/// Residual `D[φ,axis,1] - rhs` of one constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResidual {
    pub constraint: String,
    pub residual: Field,
    pub l2: f64,
    pub max: f64,
}

/// Per-constraint residual fields and interior norms.
pub fn constraint_residual(
    fixture: &SystemFixture,
    fields: &FieldSet,
    measure: &FracMeasure,
) -> Result<Vec<ConstraintResidual>> {
    require_grid(fields, measure)?;
    let orders = measure.orders();
    fixture
        .constraints
        .iter()
        .map(|c| {
            let lhs = eval_pointwise(&crate::lagexpr::Expr::Jet(c.lhs.clone()), fields, orders)?;
            let rhs = eval_pointwise(&c.rhs, fields, orders)?;
            let residual = lhs.zip_with(&rhs, |a, b| a - b)?;
            let (l2, max) = interior_norms(residual.values(), measure.grid(), INTERIOR_MARGIN);
            Ok(ConstraintResidual {
                constraint: format!("{} = {}", c.lhs, crate::lagexpr::format(&c.rhs)),
                residual,
                l2,
                max,
            })
        })
        .collect()
}

fn require_grid(fields: &FieldSet, measure: &FracMeasure) -> Result<()> {
    if fields.grid()? != *measure.grid() {
        return Err(Error::GridMismatch(
            "fields do not match the measure grid".into(),
        ));
    }
    Ok(())
}

/// The fixture's target residual evaluated with the same operator
/// pipelines as the Euler-Lagrange residual.
pub fn target_residual(
    fixture: &SystemFixture,
    fields: &FieldSet,
    measure: &FracMeasure,
) -> Result<Field> {
    require_grid(fields, measure)?;
    let orders = measure.orders();
    let mut acc = vec![0.0; measure.grid().len()];
    for t in &fixture.target_residual {
        let inner = eval_pointwise(&t.expr, fields, orders)?;
        let v = match t.op {
            None => inner,
            Some((axis, m)) => apply_derivative(orders, &inner, axis, m)?,
        };
        for (a, x) in acc.iter_mut().zip(v.values()) {
            *a += t.coef * x;
        }
    }
    Field::new(*measure.grid(), acc)
}

/// Agreement between the Euler-Lagrange residual of a completed system and
/// its target residual, plus the constrained action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub schema: String,
    pub kind: String,
    pub system: String,
    pub wrt: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub n: usize,
    /// Interior RMS and max of `el_residual - target`.
    pub l2: f64,
    pub max: f64,
    /// Interior RMS of the target residual itself.
    pub target_l2: f64,
    pub functional: f64,
}

/// Check that the Euler-Lagrange residual of the completed Lagrangian with
/// respect to the target field equals the target residual on `fields`.
pub fn verify_el_recovery(
    fixture: &SystemFixture,
    fields: &FieldSet,
    measure: &FracMeasure,
) -> Result<RecoveryReport> {
    require_grid(fields, measure)?;
    let lagrangian = fixture.completed_lagrangian()?;
    let mut set = fields.clone();
    for (k, v) in &fixture.parameters {
        if set.param(k).is_none() {
            set.insert_param(k.clone(), *v);
        }
    }
    let orders = measure.orders();
    let problem = ELProblem::new(lagrangian, set.clone(), orders.alpha, orders.beta)?;
    let r = el_residual(&problem, &fixture.target_wrt)?;
    let target = target_residual(fixture, &set, measure)?;
    let diff = r.zip_with(&target, |a, b| a - b)?;
    let (l2, max) = interior_norms(diff.values(), measure.grid(), INTERIOR_MARGIN);
    let (target_l2, _) = interior_norms(target.values(), measure.grid(), INTERIOR_MARGIN);
    let functional = eval_functional(&fixture.constrained_functional, &set, measure)?;
    let n = measure.grid().axis(Axis::T)?.n();
    Ok(RecoveryReport {
        schema: crate::report::SCHEMA.to_string(),
        kind: "recovery".to_string(),
        system: fixture.name.clone(),
        wrt: fixture.target_wrt.clone(),
        alpha: orders.alpha.value(),
        beta: measure.beta().map(|b| b.value()),
        n,
        l2,
        max,
        target_l2,
        functional,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{builtin_system, constraint_samples};
    use super::*;
    use crate::fracgrid::{make_grid, Grid2D};
    use crate::fracops::power_law_oracle;
    use crate::jets::Orders;

    fn ord(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    #[test]
    fn classical_potential_is_an_antiderivative() {
        let g = make_grid(0.0, 1.0, 400).unwrap();
        let u = Field::sample_line(g, |x| 2.0 * x + 1.0).unwrap();
        let phi = potential_from_field(&u, ord(1.0)).unwrap();
        assert_eq!(phi.values()[0], 0.0);
        assert!((phi.values()[400] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn potential_round_trips_the_oracle() {
        let g = make_grid(0.0, 1.0, 1024).unwrap();
        let b = ord(0.5);
        let u = Field::sample_line(g, |x| {
            power_law_oracle(1.0, b, x, OperatorKind::Derivative).unwrap()
        })
        .unwrap();
        let phi = potential_from_field(&u, b).unwrap();
        for (p, x) in phi.values().iter().zip(g.nodes()) {
            assert!((p - x).abs() < 5e-3);
        }
        let zero = potential_from_field(&Field::zeros(g), b).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constructive_samples_satisfy_the_constraints() {
        let f = builtin_system("burgers").unwrap();
        let g = Grid2D::new(
            make_grid(0.0, 1.0, 16).unwrap(),
            make_grid(0.0, 1.0, 16).unwrap(),
        );
        let o = Orders::new(ord(0.6), ord(0.4));
        let m = FracMeasure::new(o, FieldGrid::Plane(g));
        let s = constraint_samples(&f, g, o, 1, 3).unwrap().remove(0);
        for c in constraint_residual(&f, &s, &m).unwrap() {
            assert!(c.max <= 1e-8, "{}: {}", c.constraint, c.max);
        }
        // negative control: swap in an unrelated u
        let mut bad = s.clone();
        bad.insert_field("u", Field::sample_plane(g, |t, x| t - x).unwrap());
        assert!(constraint_residual(&f, &bad, &m).unwrap()[0].max > 1e-3);
    }

    #[test]
    fn burgers_phi_equation_is_conservative() {
        let f = builtin_system("burgers").unwrap();
        let g = Grid2D::new(
            make_grid(0.0, 1.0, 20).unwrap(),
            make_grid(0.0, 2.0, 24).unwrap(),
        );
        let o = Orders::new(ord(0.7), ord(0.5));
        let m = FracMeasure::new(o, FieldGrid::Plane(g));
        let set = FieldSet::new()
            .with_field("u", Field::sample_plane(g, |t, x| (t + x).sin()).unwrap())
            .with_field("phi", Field::sample_plane(g, |t, x| t * x * x).unwrap())
            .with_field("F", Field::sample_plane(g, |t, x| (t - x).cos()).unwrap());
        let r = verify_el_recovery(&f, &set, &m).unwrap();
        assert!(r.max <= 1e-8 * r.target_l2.max(1.0), "{r:?}");
        assert!(r.functional.is_finite());
    }
}
