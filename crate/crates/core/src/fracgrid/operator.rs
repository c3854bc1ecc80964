use rayon::prelude::*;

use super::{Axis, Field, FieldGrid, Grid1D};
use crate::error::{Error, Result};
use crate::fracops::{FractionalOrder, OperatorKind};

/// Shifted Grünwald-Letnikov operator on a uniform grid.
///
/// The operator matrix is lower-triangular Toeplitz with first column
/// `weights`. Derivatives act on `f - f(a)`, so constants map to zero
/// exactly and the first output node is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FracOperator {
    order: FractionalOrder,
    kind: OperatorKind,
    grid: Grid1D,
    weights: Vec<f64>,
    shift: bool,
}

/// Build the operator of the given order and kind on `grid`.
///
/// Derivative weights are `(-1)^k C(α, k) h^(-α)`, integral weights
/// `(-1)^k C(-α, k) h^α`, both from the usual product recurrence.
pub fn build_operator(order: FractionalOrder, kind: OperatorKind, grid: Grid1D) -> FracOperator {
    let a = order.value();
    let h = grid.h();
    let len = grid.len();
    let (sign, scale) = match kind {
        OperatorKind::Derivative => (-1.0, h.powf(-a)),
        OperatorKind::Integral => (1.0, h.powf(a)),
    };
    let mut raw = Vec::with_capacity(len);
    raw.push(1.0);
    for k in 1..len {
        let kf = k as f64;
        raw.push(raw[k - 1] * (kf - 1.0 + sign * a) / kf);
    }
    FracOperator {
        order,
        kind,
        grid,
        weights: raw.into_iter().map(|w| w * scale).collect(),
        shift: kind == OperatorKind::Derivative,
    }
}

impl FracOperator {
    pub fn new(order: FractionalOrder, kind: OperatorKind, grid: Grid1D) -> Self {
        build_operator(order, kind, grid)
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shifts(&self) -> bool {
        self.shift
    }

    fn convolve(&self, input: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.weights[k] * input[i - k];
            }
            *o = acc;
        }
    }

    fn convolve_transpose(&self, input: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = input[j..]
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * x)
                .sum();
        }
    }
}

/// Something that maps one grid line to another.
pub trait LineOperator: Sync {
    fn grid(&self) -> &Grid1D;
    fn apply_line(&self, input: &[f64], out: &mut [f64]);
    fn adjoint_line(&self, input: &[f64], out: &mut [f64]);
}

impl LineOperator for FracOperator {
    fn grid(&self) -> &Grid1D {
        &self.grid
    }

    fn apply_line(&self, input: &[f64], out: &mut [f64]) {
        if self.shift {
            let f0 = input[0];
            let shifted: Vec<f64> = input.iter().map(|v| v - f0).collect();
            self.convolve(&shifted, out);
        } else {
            self.convolve(input, out);
        }
    }

    // M = T (I - 1 e₀ᵀ) for the shifted derivative, so Mᵀ y = Tᵀy - e₀ Σ (Tᵀy).
    fn adjoint_line(&self, input: &[f64], out: &mut [f64]) {
        self.convolve_transpose(input, out);
        if self.shift {
            let total: f64 = out.iter().sum();
            out[0] -= total;
        }
    }
}

/// `k`-fold composition of a single-order operator, realizing `D^(kα)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPipeline {
    op: FracOperator,
    k: usize,
}

/// Compose `op` with itself `k` times, `k ∈ 1..=4`.
pub fn compose_order(op: &FracOperator, k: usize) -> Result<OperatorPipeline> {
    if !(1..=4).contains(&k) {
        return Err(Error::CompositionRange(k));
    }
    Ok(OperatorPipeline { op: op.clone(), k })
}

impl OperatorPipeline {
    pub fn operator(&self) -> &FracOperator {
        &self.op
    }

    pub fn count(&self) -> usize {
        self.k
    }
}

impl LineOperator for OperatorPipeline {
    fn grid(&self) -> &Grid1D {
        &self.op.grid
    }

    fn apply_line(&self, input: &[f64], out: &mut [f64]) {
        let mut cur = input.to_vec();
        for _ in 0..self.k {
            self.op.apply_line(&cur, out);
            cur.copy_from_slice(out);
        }
    }

    fn adjoint_line(&self, input: &[f64], out: &mut [f64]) {
        let mut cur = input.to_vec();
        for _ in 0..self.k {
            self.op.adjoint_line(&cur, out);
            cur.copy_from_slice(out);
        }
    }
}

fn require_line<'a>(op: &impl LineOperator, f: &'a Field) -> Result<&'a Grid1D> {
    let g = f.line_grid()?;
    if g != op.grid() {
        return Err(Error::GridMismatch(
            "operator and field grids differ".into(),
        ));
    }
    Ok(g)
}

/// Apply an operator to a 1D field.
pub fn apply_operator(op: &impl LineOperator, f: &Field) -> Result<Field> {
    let g = require_line(op, f)?;
    let mut out = vec![0.0; g.len()];
    op.apply_line(f.values(), &mut out);
    Ok(Field::from_raw(FieldGrid::Line(*g), out))
}

/// Apply the exact matrix transpose of an operator to a 1D field.
pub fn apply_adjoint(op: &impl LineOperator, f: &Field) -> Result<Field> {
    let g = require_line(op, f)?;
    let mut out = vec![0.0; g.len()];
    op.adjoint_line(f.values(), &mut out);
    Ok(Field::from_raw(FieldGrid::Line(*g), out))
}

fn along_axis(op: &impl LineOperator, f: &Field, axis: Axis, adjoint: bool) -> Result<Field> {
    let run = |input: &[f64], out: &mut [f64]| {
        if adjoint {
            op.adjoint_line(input, out)
        } else {
            op.apply_line(input, out)
        }
    };
    match f.grid() {
        FieldGrid::Line(_) => {
            if axis != Axis::T {
                return Err(Error::AxisUnavailable(axis.name()));
            }
            let g = require_line(op, f)?;
            let mut out = vec![0.0; g.len()];
            run(f.values(), &mut out);
            Ok(Field::from_raw(FieldGrid::Line(*g), out))
        }
        FieldGrid::Plane(g) => {
            if g.axis(axis) != op.grid() {
                return Err(Error::GridMismatch(format!(
                    "operator grid does not match the {axis} axis"
                )));
            }
            let (nt, nx) = (g.t.len(), g.x.len());
            let mut out = vec![0.0; g.len()];
            match axis {
                Axis::X => {
                    out.par_chunks_mut(nx)
                        .zip(f.values().par_chunks(nx))
                        .for_each(|(o, row)| run(row, o));
                }
                Axis::T => {
                    let cols: Vec<Vec<f64>> = (0..nx)
                        .into_par_iter()
                        .map(|j| {
                            let col: Vec<f64> = (0..nt).map(|i| f.values()[i * nx + j]).collect();
                            let mut o = vec![0.0; nt];
                            run(&col, &mut o);
                            o
                        })
                        .collect();
                    for (j, col) in cols.iter().enumerate() {
                        for (i, v) in col.iter().enumerate() {
                            out[i * nx + j] = *v;
                        }
                    }
                }
            }
            Ok(Field::from_raw(FieldGrid::Plane(*g), out))
        }
    }
}

/// Apply a line operator independently along every line of `axis`.
///
/// A 1D field is treated as lying on the `t` axis.
pub fn apply_along_axis(op: &impl LineOperator, f: &Field, axis: Axis) -> Result<Field> {
    along_axis(op, f, axis, false)
}

/// Transpose of [`apply_along_axis`].
pub fn apply_adjoint_along_axis(op: &impl LineOperator, f: &Field, axis: Axis) -> Result<Field> {
    along_axis(op, f, axis, true)
}
