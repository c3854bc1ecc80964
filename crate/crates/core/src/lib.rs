//! Numerical toolkit for variational problems built on the modified
//! Riemann-Liouville (Jumarie) fractional derivative.
//!
//! * [`fracops`]: continuous operators by singular-kernel quadrature.
//! * [`fracgrid`]: grids, fields and discrete Grünwald-Letnikov operators.
//! * [`lagexpr`]: a small DSL for Lagrangian densities over jet variables.
//! * [`jets`]: named field sets and their jet tables on a grid.
//! * [`functional`]: fractional action functionals and identity probes.
//! * [`eulagrange`]: fractional Euler-Lagrange residuals and exact discrete gradients.
//! * [`semiinverse`]: trial Lagrangians, completion identification and worked systems.
//! * [`report`]: resolution-ladder probe reports.
//! * [`io`]: the CSV field format and JSON report rendering.

pub mod error;
pub mod eulagrange;
pub mod fracgrid;
pub mod fracops;
pub mod functional;
pub mod io;
pub mod jets;
pub mod lagexpr;
pub mod quad;
pub mod report;
pub mod semiinverse;

pub use error::{Error, Result};
