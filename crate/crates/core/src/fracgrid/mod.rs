//! Uniform grids, sampled fields and discrete fractional operators.
//!
//! Two-dimensional fields are stored row-major as `[t][x]`: the value at
//! time node `i` and space node `j` lives at index `i * (m + 1) + j`.

mod operator;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use operator::{
    apply_adjoint, apply_adjoint_along_axis, apply_along_axis, apply_operator, build_operator,
    compose_order, FracOperator, LineOperator, OperatorPipeline,
};

use crate::error::{Error, Result};

/// Coordinate axis of a time-space field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    T,
    X,
}

impl Axis {
    pub fn name(self) -> char {
        match self {
            Axis::T => 't',
            Axis::X => 'x',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Uniform grid `a + i·h`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!("need a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 intervals, got {n}"
            )));
        }
        Ok(Grid1D { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }
}

/// `make_grid` under its conventional name.
pub fn make_grid(a: f64, b: f64, n: usize) -> Result<Grid1D> {
    Grid1D::new(a, b, n)
}

/// Tensor grid over the rectangle `a ≤ t ≤ b`, `c ≤ x ≤ d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub t: Grid1D,
    pub x: Grid1D,
}

impl Grid2D {
    pub fn new(t: Grid1D, x: Grid1D) -> Self {
        Grid2D { t, x }
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.x.len() + j
    }

    pub fn axis(&self, axis: Axis) -> &Grid1D {
        match axis {
            Axis::T => &self.t,
            Axis::X => &self.x,
        }
    }
}

/// The grid a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FieldGrid {
    /// A single axis, treated as the `t` axis where an axis matters.
    Line(Grid1D),
    Plane(Grid2D),
}

impl FieldGrid {
    pub fn len(&self) -> usize {
        match self {
            FieldGrid::Line(g) => g.len(),
            FieldGrid::Plane(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The 1D grid along `axis`, if the field has that axis.
    pub fn axis(&self, axis: Axis) -> Result<&Grid1D> {
        match (self, axis) {
            (FieldGrid::Line(g), Axis::T) => Ok(g),
            (FieldGrid::Line(_), Axis::X) => Err(Error::AxisUnavailable('x')),
            (FieldGrid::Plane(g), a) => Ok(g.axis(a)),
        }
    }

    /// Coordinates `(t, x)` of node `k`; `x` is `None` on a line.
    pub fn coords(&self, k: usize) -> (f64, Option<f64>) {
        match self {
            FieldGrid::Line(g) => (g.node(k), None),
            FieldGrid::Plane(g) => {
                let m = g.x.len();
                (g.t.node(k / m), Some(g.x.node(k % m)))
            }
        }
    }

    /// Nodes lying on the boundary of the domain.
    pub fn boundary_mask(&self) -> Vec<bool> {
        self.interior_mask(1).into_iter().map(|b| !b).collect()
    }

    /// Nodes at least `margin` cells away from every boundary.
    pub fn interior_mask(&self, margin: usize) -> Vec<bool> {
        let inside = |i: usize, g: &Grid1D| i >= margin && i + margin <= g.n();
        match self {
            FieldGrid::Line(g) => (0..g.len()).map(|i| inside(i, g)).collect(),
            FieldGrid::Plane(g) => {
                let mut out = Vec::with_capacity(g.len());
                for i in 0..g.t.len() {
                    for j in 0..g.x.len() {
                        out.push(inside(i, &g.t) && inside(j, &g.x));
                    }
                }
                out
            }
        }
    }
}

impl From<Grid1D> for FieldGrid {
    fn from(g: Grid1D) -> Self {
        FieldGrid::Line(g)
    }
}

impl From<Grid2D> for FieldGrid {
    fn from(g: Grid2D) -> Self {
        FieldGrid::Plane(g)
    }
}

/// Real samples on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: FieldGrid,
    values: Vec<f64>,
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFiniteSample {
            node,
            value: values[node],
        }),
        None => Ok(()),
    }
}

impl Field {
    pub fn new(grid: impl Into<FieldGrid>, values: Vec<f64>) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(Field { grid, values })
    }

    pub(crate) fn from_raw(grid: FieldGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Field { grid, values }
    }

    pub fn zeros(grid: impl Into<FieldGrid>) -> Self {
        let grid = grid.into();
        Field {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: impl Into<FieldGrid>, c: f64) -> Result<Self> {
        let grid = grid.into();
        Field::new(grid, vec![c; grid.len()])
    }

    /// Samples `f(x)` at the nodes of a line grid.
    pub fn sample_line(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    /// Samples `f(t, x)` at the nodes of a plane grid.
    pub fn sample_plane(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.x.nodes();
        let mut values = Vec::with_capacity(grid.len());
        for t in grid.t.nodes() {
            values.extend(xs.iter().map(|&x| f(t, x)));
        }
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at time node `i`, space node `j` of a plane field.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match &self.grid {
            FieldGrid::Line(_) => self.values[i],
            FieldGrid::Plane(g) => self.values[g.index(i, j)],
        }
    }

    pub fn line_grid(&self) -> Result<&Grid1D> {
        match &self.grid {
            FieldGrid::Line(g) => Ok(g),
            FieldGrid::Plane(_) => Err(Error::GridMismatch("expected a 1D field".into())),
        }
    }

    pub fn plane_grid(&self) -> Result<&Grid2D> {
        match &self.grid {
            FieldGrid::Plane(g) => Ok(g),
            FieldGrid::Line(_) => Err(Error::GridMismatch("expected a 2D field".into())),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.require_same_grid(other)?;
        Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn require_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(crate::quad::neumaier_sum(
            self.values.iter().zip(&other.values).map(|(a, b)| a * b),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.h(), 0.25);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(make_grid(0.0, 1.0, 1), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            make_grid(2.0, 1.0, 10),
            Err(Error::InvalidGrid(_))
        ));
        assert!(make_grid(0.0, f64::INFINITY, 10).is_err());
    }

    #[test]
    fn sampling() {
        let g = make_grid(0.0, 1.0, 2).unwrap();
        assert_eq!(
            Field::sample_line(g, |x| x * x).unwrap().values(),
            &[0.0, 0.25, 1.0]
        );
        assert!(Field::constant(g, 3.0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 3.0));
        let g4 = make_grid(0.0, 1.0, 4).unwrap();
        let s = Field::sample_line(g4, |x| (std::f64::consts::PI * x).sin()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [0.0, h, 1.0, h, 0.0];
        for (v, w) in s.values().iter().zip(want) {
            assert!((v - w).abs() < 1e-15);
        }
        assert!(matches!(
            Field::sample_line(g, |x| 1.0 / x),
            Err(Error::NonFiniteSample { node: 0, .. })
        ));
    }

    #[test]
    fn plane_layout_is_row_major_in_t() {
        let g = Grid2D::new(
            make_grid(0.0, 1.0, 2).unwrap(),
            make_grid(0.0, 2.0, 3).unwrap(),
        );
        let f = Field::sample_plane(g, |t, x| 10.0 * t + x).unwrap();
        assert_eq!(f.len(), 12);
        assert_eq!(f.values()[1], 2.0 / 3.0);
        assert_eq!(f.at(1, 0), 5.0);
        assert_eq!(FieldGrid::Plane(g).coords(5), (0.5, Some(2.0 / 3.0)));
    }

    #[test]
    fn masks() {
        let g = FieldGrid::Line(make_grid(0.0, 1.0, 6).unwrap());
        assert_eq!(
            g.interior_mask(2),
            vec![false, false, true, true, true, false, false]
        );
        assert_eq!(
            g.boundary_mask(),
            vec![true, false, false, false, false, false, true]
        );
    }
}
