//! Fractional action functionals `∬ L (dt)^α (dx)^β`, their first variation,
//! and numerical probes of the Green, Leibniz and chain rules.

mod probes;

use crate::error::{Error, Result};
use crate::fracgrid::{Field, FieldGrid, Grid1D, Grid2D};
use crate::fracops::{gamma, FractionalOrder};
use crate::jets::{FieldSet, JetTable, Orders};
use crate::lagexpr::Expr;
use crate::quad::{gauss_cell, neumaier_sum};

pub use probes::{
    chainrule_ladder, chainrule_probe, chainrule_residual, green_ladder, green_probe,
    leibniz_ladder, leibniz_probe, leibniz_residual, Outer,
};

/// Weights `w` with `Σ w_i f(ξ_i) ≈ ∫_a^b f(ξ) (dξ)^α = ∫_a^b f(ξ) α(b-ξ)^(α-1) dξ`.
///
/// Product integration of the kernel against piecewise-linear interpolation
/// of `f`. At `α = 1` these are the trapezoid weights; for every order they
/// sum to `(b-a)^α` up to rounding.
pub fn line_weights(order: FractionalOrder, grid: &Grid1D) -> Vec<f64> {
    let a = order.value();
    let n = grid.n();
    let mut w = vec![0.0; n + 1];
    for k in 0..n {
        // cell k counted from the upper end; s = (b - ξ)/h = k + τ
        let (near, far) = if k == 0 {
            (1.0 / (a + 1.0), a / (a + 1.0))
        } else {
            let kf = k as f64;
            (
                gauss_cell(
                    &mut |tau| a * (kf + tau).powf(a - 1.0) * (1.0 - tau),
                    0.0,
                    1.0,
                ),
                gauss_cell(&mut |tau| a * (kf + tau).powf(a - 1.0) * tau, 0.0, 1.0),
            )
        };
        w[n - k] += near;
        w[n - k - 1] += far;
    }
    let scale = grid.h().powf(a);
    w.iter_mut().for_each(|v| *v *= scale);
    w
}

/// Node weights of `1/(Γ(1+α)Γ(1+β)) (dt)^α (dx)^β` on a grid, or of
/// `1/Γ(1+α) (dt)^α` on a line.
#[derive(Debug, Clone, PartialEq)]
pub struct FracMeasure {
    orders: Orders,
    grid: FieldGrid,
    weights: Vec<f64>,
}

impl FracMeasure {
    pub fn new(orders: Orders, grid: FieldGrid) -> Self {
        let pre = |o: FractionalOrder| 1.0 / gamma(1.0 + o.value()).expect("1+α is positive");
        let weights = match &grid {
            FieldGrid::Line(g) => {
                let c = pre(orders.alpha);
                line_weights(orders.alpha, g)
                    .into_iter()
                    .map(|w| c * w)
                    .collect()
            }
            FieldGrid::Plane(g) => {
                let c = pre(orders.alpha) * pre(orders.beta);
                let wt = line_weights(orders.alpha, &g.t);
                let wx = line_weights(orders.beta, &g.x);
                let mut out = Vec::with_capacity(g.len());
                for a in &wt {
                    out.extend(wx.iter().map(|b| c * a * b));
                }
                out
            }
        };
        FracMeasure {
            orders,
            grid,
            weights,
        }
    }

    pub fn plane(alpha: FractionalOrder, beta: FractionalOrder, grid: Grid2D) -> Self {
        Self::new(Orders::new(alpha, beta), FieldGrid::Plane(grid))
    }

    /// A 1D measure on the `t` axis.
    pub fn line(alpha: FractionalOrder, grid: Grid1D) -> Self {
        Self::new(Orders::new(alpha, alpha), FieldGrid::Line(grid))
    }

    pub fn orders(&self) -> Orders {
        self.orders
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.orders.alpha
    }

    pub fn beta(&self) -> Option<FractionalOrder> {
        match self.grid {
            FieldGrid::Line(_) => None,
            FieldGrid::Plane(_) => Some(self.orders.beta),
        }
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i v_i` with compensated summation.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::GridMismatch(
                "values do not match the measure grid".into(),
            ));
        }
        let s = neumaier_sum(self.weights.iter().zip(values).map(|(w, v)| w * v));
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn integrate_field(&self, f: &Field) -> Result<f64> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "field does not match the measure grid".into(),
            ));
        }
        self.integrate(f.values())
    }
}

/// `J = 1/(Γ(1+α)Γ(1+β)) ∬ L (dt)^α (dx)^β`, with jet variables sampled from
/// `fields` through the operator pipelines of the measure's orders.
pub fn eval_functional(l: &Expr, fields: &FieldSet, measure: &FracMeasure) -> Result<f64> {
    let vars = l.jet_vars();
    let table = JetTable::on_grid(*measure.grid(), fields, measure.orders(), &vars)?;
    measure.integrate(&table.eval(l, fields)?)
}

/// A boundary-vanishing variation direction `η` with step `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    eta: Field,
    epsilon: f64,
}

impl Perturbation {
    pub fn new(eta: Field, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step must be positive and finite, got {epsilon}"
            )));
        }
        let on_boundary = eta.grid().boundary_mask();
        if let Some(k) = (0..eta.len()).find(|&k| on_boundary[k] && eta.values()[k] != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "perturbation is nonzero on boundary node {k}"
            )));
        }
        Ok(Perturbation { eta, epsilon })
    }

    /// Step `1e-6 · max(1, max|y|)`.
    pub fn scaled_to(eta: Field, y: &Field) -> Result<Self> {
        let m = y.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self::new(eta, 1e-6 * m.max(1.0))
    }

    pub fn eta(&self) -> &Field {
        &self.eta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Central-difference estimate `(J[y+εη] - J[y-εη]) / 2ε` of the first
/// variation with respect to field `wrt`.
pub fn first_variation(
    l: &Expr,
    fields: &FieldSet,
    measure: &FracMeasure,
    pert: &Perturbation,
    wrt: &str,
) -> Result<f64> {
    let y = fields
        .field(wrt)
        .ok_or_else(|| Error::Unbound(wrt.to_string()))?;
    y.require_same_grid(&pert.eta)?;
    if pert.eta.values().iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let eps = pert.epsilon;
    let shifted = |s: f64| -> Result<f64> {
        let moved = y.zip_with(&pert.eta, |a, b| a + s * b)?;
        let mut set = fields.clone();
        set.insert_field(wrt, moved);
        eval_functional(l, &set, measure)
    };
    Ok((shifted(eps)? - shifted(-eps)?) / (2.0 * eps))
}
