//! Continuous modified Riemann-Liouville operators.
//!
//! All operators act on a [`ScalarFunction`] defined on a finite interval
//! [a, b] with the lower terminal at `a`. Internally every evaluation goes
//! through the offset `x - a`, so an operator on [a, b] gives bit-identical
//! results to the same operator on [0, b - a] applied to the translated
//! function.
//!
//! The weakly singular kernel `(x - ξ)^(μ-1)` is removed by the substitution
//! `x - ξ = L·v^(1/μ)` (with `L = x - a`), which turns
//!
//! ```text
//! ∫ₐˣ (x - ξ)^(μ-1) g(ξ) dξ  =  (L^μ / μ) ∫₀¹ g(a + L·(1 - v^(1/μ))) dv
//! ```
//!
//! The remaining integral is evaluated on a mesh graded toward both ends of
//! [0, 1] (the end `v = 0` is the old singular endpoint `ξ = x`; `v = 1` is
//! the lower terminal, where `g` itself may be non-smooth).

mod gamma;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use gamma::{gamma, recip_gamma};

use crate::error::{Error, Result};
use crate::quad;

/// Default absolute tolerance of the singular quadrature.
pub const DEFAULT_TOL: f64 = 1e-8;

/// A fractional order in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub const ONE: FractionalOrder = FractionalOrder(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(FractionalOrder(value))
        } else {
            Err(Error::InvalidOrder(value, "(0, 1]"))
        }
    }

    /// Order restricted to the open interval (0, 1).
    pub fn new_proper(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(FractionalOrder(value))
        } else {
            Err(Error::InvalidOrder(value, "(0, 1)"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        FractionalOrder::new(v)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(o: FractionalOrder) -> f64 {
        o.0
    }
}

impl fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether an operator differentiates or integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Derivative,
    Integral,
}

/// A real function on a closed interval [a, b].
#[derive(Clone)]
pub struct ScalarFunction {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    a: f64,
    b: f64,
    smooth: bool,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("smooth", &self.smooth)
            .finish_non_exhaustive()
    }
}

impl ScalarFunction {
    /// A continuous function; differentiability is not assumed.
    pub fn new(a: f64, b: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}] is empty"
            )));
        }
        Ok(ScalarFunction {
            f: Arc::new(f),
            a,
            b,
            smooth: false,
        })
    }

    /// A function declared continuously differentiable, which enables the
    /// Caputo-form evaluation of [`mrl_derivative`].
    pub fn smooth(a: f64, b: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mut s = Self::new(a, b, f)?;
        s.smooth = true;
        Ok(s)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn at_offset(&self, y: f64) -> f64 {
        (self.f)(self.a + y)
    }

    fn width(&self) -> f64 {
        self.b - self.a
    }

    fn offset_of(&self, x: f64) -> Result<f64> {
        if !(x >= self.a && x <= self.b) {
            return Err(Error::OutOfInterval {
                x,
                a: self.a,
                b: self.b,
            });
        }
        Ok(x - self.a)
    }
}

/// Quadrature settings for the continuous operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOptions {
    pub tol: f64,
}

impl Default for FracOptions {
    fn default() -> Self {
        FracOptions { tol: DEFAULT_TOL }
    }
}

// 1 - v^(1/mu), accurate near v = 1.
fn kernel_map(v: f64, mu: f64) -> f64 {
    -(v.ln() / mu).exp_m1()
}

/// ∫₀¹ g(a + L(1 - v^(1/μ))) dv, adaptively. Returns the value and level.
fn mapped_integral(
    f: &ScalarFunction,
    len: f64,
    mu: f64,
    tol: f64,
    shift: f64,
) -> Result<(f64, u32)> {
    quad::graded_adaptive(&mut |v| f.at_offset(len * kernel_map(v, mu)) - shift, tol)
}

fn mapped_integral_fixed(f: &ScalarFunction, len: f64, mu: f64, level: u32, shift: f64) -> f64 {
    quad::graded_fixed(&mut |v| f.at_offset(len * kernel_map(v, mu)) - shift, level)
}

/// `∫ₐˣ (x - ξ)^(α-1) f(ξ) dξ` (without the 1/Γ(α) factor).
fn kernel_integral(
    f: &ScalarFunction,
    alpha: FractionalOrder,
    x: f64,
    opts: &FracOptions,
) -> Result<f64> {
    let len = f.offset_of(x)?;
    if len == 0.0 {
        return Ok(0.0);
    }
    let mu = alpha.value();
    let scale = len.powf(mu) / mu;
    let (j, _) = mapped_integral(f, len, mu, opts.tol / scale.max(1.0), 0.0)?;
    Ok(scale * j)
}

/// Riemann-Liouville integral `(1/Γ(α)) ∫ₐˣ (x - ξ)^(α-1) f(ξ) dξ`.
pub fn rl_integral(f: &ScalarFunction, alpha: FractionalOrder, x: f64) -> Result<f64> {
    rl_integral_with(f, alpha, x, &FracOptions::default())
}

pub fn rl_integral_with(
    f: &ScalarFunction,
    alpha: FractionalOrder,
    x: f64,
    opts: &FracOptions,
) -> Result<f64> {
    let k = kernel_integral(f, alpha, x, opts)?;
    Ok(k / gamma(alpha.value())?)
}

/// The integral with respect to `(dξ)^α`,
/// `(1/Γ(α+1)) ∫ₐˣ f(ξ)(dξ)^α = (α/Γ(α+1)) ∫ₐˣ (x - ξ)^(α-1) f(ξ) dξ`.
pub fn frac_integral_dxa(f: &ScalarFunction, alpha: FractionalOrder, x: f64) -> Result<f64> {
    frac_integral_dxa_with(f, alpha, x, &FracOptions::default())
}

pub fn frac_integral_dxa_with(
    f: &ScalarFunction,
    alpha: FractionalOrder,
    x: f64,
    opts: &FracOptions,
) -> Result<f64> {
    let k = kernel_integral(f, alpha, x, opts)?;
    let a = alpha.value();
    Ok(a * k / gamma(a + 1.0)?)
}

/// Modified Riemann-Liouville derivative
/// `(1/Γ(1-α)) d/dx ∫ₐˣ (x - ξ)^(-α) (f(ξ) - f(a)) dξ`.
///
/// Smooth functions use the equivalent Caputo form with a finite-difference
/// `f'`; other functions differentiate the shifted integral numerically.
/// At `α = 1` this is the classical derivative. At `x = a` the result is 0.
pub fn mrl_derivative(f: &ScalarFunction, alpha: FractionalOrder, x: f64) -> Result<f64> {
    mrl_derivative_with(f, alpha, x, &FracOptions::default())
}

pub fn mrl_derivative_with(
    f: &ScalarFunction,
    alpha: FractionalOrder,
    x: f64,
    opts: &FracOptions,
) -> Result<f64> {
    let len = f.offset_of(x)?;
    if alpha.is_classical() {
        return Ok(first_derivative_at(f, len));
    }
    if len == 0.0 {
        return Ok(0.0);
    }
    let mu = 1.0 - alpha.value();
    if f.is_smooth() {
        caputo_form(f, mu, len, opts)
    } else {
        shifted_integral_derivative(f, mu, len, opts)
    }
}

fn caputo_form(f: &ScalarFunction, mu: f64, len: f64, opts: &FracOptions) -> Result<f64> {
    let pref = len.powf(mu) / gamma(1.0 + mu)?;
    let (j, _) = quad::graded_adaptive(
        &mut |v| first_derivative_at(f, len * kernel_map(v, mu)),
        opts.tol / pref.max(1.0),
    )?;
    Ok(pref * j)
}

fn shifted_integral_derivative(
    f: &ScalarFunction,
    mu: f64,
    len: f64,
    opts: &FracOptions,
) -> Result<f64> {
    let fa = f.at_offset(0.0);
    let pref = 1.0 / gamma(1.0 + mu)?;
    // pick the mesh at the evaluation point, then keep it fixed for the stencil
    let (_, level) = mapped_integral(f, len, mu, opts.tol * 1e-3, fa)?;
    let big_f = |l: f64| l.powf(mu) * mapped_integral_fixed(f, l, mu, level, fa);
    let d = len / 128.0;
    let deriv = if len + 2.0 * d <= f.width() {
        let (p1, m1) = (big_f(len + d), big_f(len - d));
        let (p2, m2) = (big_f(len + 2.0 * d), big_f(len - 2.0 * d));
        (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * d)
    } else {
        let f0 = big_f(len);
        let f1 = big_f(len - d);
        let f2 = big_f(len - 2.0 * d);
        let f3 = big_f(len - 3.0 * d);
        let f4 = big_f(len - 4.0 * d);
        (25.0 * f0 - 48.0 * f1 + 36.0 * f2 - 16.0 * f3 + 3.0 * f4) / (12.0 * d)
    };
    let out = pref * deriv;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite)
    }
}

/// Fourth-order finite-difference f' at offset `y`, one-sided near the ends.
fn first_derivative_at(f: &ScalarFunction, y: f64) -> f64 {
    let w = f.width();
    let d = w * 1e-3;
    if y - 2.0 * d >= 0.0 && y + 2.0 * d <= w {
        let near = f.at_offset(y + d) - f.at_offset(y - d);
        let far = f.at_offset(y + 2.0 * d) - f.at_offset(y - 2.0 * d);
        (8.0 * near - far) / (12.0 * d)
    } else {
        let s = if y - 2.0 * d < 0.0 { 1.0 } else { -1.0 };
        let g = |k: f64| f.at_offset(y + s * k * d) - f.at_offset(y);
        s * (48.0 * g(1.0) - 36.0 * g(2.0) + 16.0 * g(3.0) - 3.0 * g(4.0)) / (12.0 * d)
    }
}

/// Closed form of the operators on `ξ^γ` over [0, x]; a test oracle.
///
/// The derivative of a constant (`γ = 0`) is 0, as for the modified
/// derivative.
pub fn power_law_oracle(
    gamma_exp: f64,
    alpha: FractionalOrder,
    x: f64,
    kind: OperatorKind,
) -> Result<f64> {
    if gamma_exp.is_nan() || gamma_exp <= -1.0 {
        return Err(Error::InvalidArgument(format!(
            "exponent {gamma_exp} must exceed -1"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "x = {x} must be non-negative"
        )));
    }
    let a = alpha.value();
    let num = gamma(gamma_exp + 1.0)?;
    match kind {
        OperatorKind::Derivative => {
            if gamma_exp == 0.0 {
                return Ok(0.0);
            }
            Ok(num / gamma(gamma_exp + 1.0 - a)? * x.powf(gamma_exp - a))
        }
        OperatorKind::Integral => Ok(num / gamma(gamma_exp + 1.0 + a)? * x.powf(gamma_exp + a)),
    }
}
