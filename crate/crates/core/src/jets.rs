//! Named field collections and pointwise evaluation of expressions over
//! the jet variables they induce.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fracgrid::{
    apply_adjoint_along_axis, apply_along_axis, build_operator, compose_order, Axis, Field,
    FieldGrid, OperatorPipeline,
};
use crate::fracops::{FractionalOrder, OperatorKind};
use crate::lagexpr::{CompiledExpr, Expr, JetVar, Leaf};

/// Sampled fields and named scalar parameters, all on one grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldSet {
    fields: BTreeMap<String, Field>,
    params: BTreeMap<String, f64>,
}

impl FieldSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_field(mut self, name: impl Into<String>, f: Field) -> Self {
        self.fields.insert(name.into(), f);
        self
    }

    pub fn with_param(mut self, name: impl Into<String>, v: f64) -> Self {
        self.params.insert(name.into(), v);
        self
    }

    pub fn insert_field(&mut self, name: impl Into<String>, f: Field) {
        self.fields.insert(name.into(), f);
    }

    pub fn insert_param(&mut self, name: impl Into<String>, v: f64) {
        self.params.insert(name.into(), v);
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.get(name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn fields(&self) -> &BTreeMap<String, Field> {
        &self.fields
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// The grid shared by every field.
    pub fn grid(&self) -> Result<FieldGrid> {
        let mut it = self.fields.values();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidArgument("no fields given".into()))?;
        for f in it {
            first.require_same_grid(f)?;
        }
        Ok(*first.grid())
    }

    pub(crate) fn require_field(&self, name: &str) -> Result<&Field> {
        self.field(name)
            .ok_or_else(|| Error::Unbound(name.to_string()))
    }
}

/// The orders attached to the two axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orders {
    pub alpha: FractionalOrder,
    pub beta: FractionalOrder,
}

impl Orders {
    pub fn new(alpha: FractionalOrder, beta: FractionalOrder) -> Self {
        Orders { alpha, beta }
    }

    pub fn along(&self, axis: Axis) -> FractionalOrder {
        match axis {
            Axis::T => self.alpha,
            Axis::X => self.beta,
        }
    }
}

/// The composed derivative `D_axis^(m·order)` on `grid`.
pub fn derivative_pipeline(
    orders: Orders,
    grid: &FieldGrid,
    axis: Axis,
    m: u8,
) -> Result<OperatorPipeline> {
    let g = *grid.axis(axis)?;
    let op = build_operator(orders.along(axis), OperatorKind::Derivative, g);
    compose_order(&op, m as usize)
}

/// Apply `D_axis^(m·order)` to `f`.
pub fn apply_derivative(orders: Orders, f: &Field, axis: Axis, m: u8) -> Result<Field> {
    let p = derivative_pipeline(orders, f.grid(), axis, m)?;
    apply_along_axis(&p, f, axis)
}

/// Transpose of [`apply_derivative`].
pub fn apply_derivative_adjoint(orders: Orders, f: &Field, axis: Axis, m: u8) -> Result<Field> {
    let p = derivative_pipeline(orders, f.grid(), axis, m)?;
    apply_adjoint_along_axis(&p, f, axis)
}

/// Sampled values of a set of jet variables.
#[derive(Debug, Clone)]
pub struct JetTable {
    grid: FieldGrid,
    slots: Vec<JetVar>,
    values: Vec<Vec<f64>>,
}

impl JetTable {
    /// Sample every non-parameter jet variable in `vars` from `set`.
    pub fn build<'a>(
        set: &FieldSet,
        orders: Orders,
        vars: impl IntoIterator<Item = &'a JetVar>,
    ) -> Result<Self> {
        Self::on_grid(set.grid()?, set, orders, vars)
    }

    /// As [`JetTable::build`], on an explicit grid that every referenced
    /// field must share.
    pub fn on_grid<'a>(
        grid: FieldGrid,
        set: &FieldSet,
        orders: Orders,
        vars: impl IntoIterator<Item = &'a JetVar>,
    ) -> Result<Self> {
        let mut slots = Vec::new();
        let mut values = Vec::new();
        for v in vars {
            if v.is_field() && set.param(&v.field).is_some() && set.field(&v.field).is_none() {
                continue;
            }
            if slots.contains(v) {
                continue;
            }
            let f = set.require_field(&v.field)?;
            if f.grid() != &grid {
                return Err(Error::GridMismatch(format!(
                    "field `{}` is on another grid",
                    v.field
                )));
            }
            let vals = match v.axis {
                None => f.values().to_vec(),
                Some(axis) => apply_derivative(orders, f, axis, v.multiplicity)?.into_values(),
            };
            slots.push(v.clone());
            values.push(vals);
        }
        Ok(JetTable {
            grid,
            slots,
            values,
        })
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn slots(&self) -> &[JetVar] {
        &self.slots
    }

    pub fn column(&self, v: &JetVar) -> Option<&[f64]> {
        self.slots
            .iter()
            .position(|s| s == v)
            .map(|i| self.values[i].as_slice())
    }

    /// Evaluate `e` at every node. Parameters of `set` are inlined as
    /// constants.
    pub fn eval(&self, e: &Expr, set: &FieldSet) -> Result<Vec<f64>> {
        let resolve = |v: &JetVar| {
            if let Some(i) = self.slots.iter().position(|s| s == v) {
                return Some(Leaf::Slot(i));
            }
            if v.is_field() {
                return set.param(&v.field).map(Leaf::Const);
            }
            None
        };
        let plane = matches!(self.grid, FieldGrid::Plane(_));
        let c = CompiledExpr::compile(e, &resolve, plane)?;
        let ns = self.slots.len();
        (0..self.grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; ns],
                |buf, k| {
                    for (b, col) in buf.iter_mut().zip(&self.values) {
                        *b = col[k];
                    }
                    let (t, x) = self.grid.coords(k);
                    c.eval(buf, t, x.unwrap_or(0.0))
                },
            )
            .collect()
    }

    /// As [`JetTable::eval`], wrapped as a field.
    pub fn eval_field(&self, e: &Expr, set: &FieldSet) -> Result<Field> {
        Field::new(self.grid, self.eval(e, set)?)
    }
}

/// Evaluate `e` pointwise over the fields of `set`.
pub fn eval_pointwise(e: &Expr, set: &FieldSet, orders: Orders) -> Result<Field> {
    let vars: BTreeSet<JetVar> = e.jet_vars();
    JetTable::build(set, orders, &vars)?.eval_field(e, set)
}
