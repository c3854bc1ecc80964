use super::{Axis, BinOp, Expr, Func, JetVar, MAX_MULTIPLICITY};
use crate::error::{Error, Result};

/// `∂e/∂v`, treating every jet variable as an independent scalar.
pub fn partial_jet(e: &Expr, v: &JetVar) -> Expr {
    match e {
        Expr::Num(_) | Expr::Coord(_) => Expr::num(0.0),
        Expr::Jet(w) => Expr::num(if w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(partial_jet(a, v)),
        Expr::Binary(op, a, b) => {
            let da = partial_jet(a, v);
            let db = partial_jet(b, v);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinOp::Add => Expr::add(da, db),
                BinOp::Sub => Expr::sub(da, db),
                BinOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                BinOp::Div => {
                    if db.is_zero() {
                        Expr::div(da, b)
                    } else {
                        Expr::div(
                            Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                            Expr::pow(b, 2),
                        )
                    }
                }
            }
        }
        Expr::Pow(base, n) => {
            let db = partial_jet(base, v);
            if db.is_zero() {
                return Expr::num(0.0);
            }
            Expr::mul(
                Expr::mul(
                    Expr::num(*n as f64),
                    Expr::pow(base.as_ref().clone(), n - 1),
                ),
                db,
            )
        }
        Expr::Call(f, arg) => {
            let da = partial_jet(arg, v);
            if da.is_zero() {
                return Expr::num(0.0);
            }
            let arg = arg.as_ref().clone();
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, arg),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, arg)),
                Func::Exp => Expr::call(Func::Exp, arg),
            };
            Expr::mul(outer, da)
        }
    }
}

/// Apply the composed operator `D_axis^(m·order)` to an expression that is
/// linear in jet variables, symbolically: `D^m D[f,axis,k] = D[f,axis,k+m]`,
/// constants map to zero, and sums and constant multiples are distributed.
///
/// Anything else (products of jets, functions of jets, coordinates, mixed
/// axes) has no jet-form image and is reported as [`Error::NotJetLinear`].
pub fn apply_outer_jet(e: &Expr, axis: Axis, m: u8) -> Result<Expr> {
    let not_linear = || Error::NotJetLinear(super::format(e));
    match e {
        _ if e.as_const().is_some() => Ok(Expr::num(0.0)),
        Expr::Jet(v) => {
            if v.axis.is_some_and(|a| a != axis) {
                return Err(not_linear());
            }
            let k = v.multiplicity + m;
            if k > MAX_MULTIPLICITY {
                return Err(Error::NotJetLinear(format!(
                    "{} would need multiplicity {k}",
                    super::format(e)
                )));
            }
            Ok(Expr::Jet(JetVar::derivative(v.field.clone(), axis, k)))
        }
        Expr::Neg(a) => Ok(Expr::neg(apply_outer_jet(a, axis, m)?)),
        Expr::Binary(BinOp::Add, a, b) => Ok(Expr::add(
            apply_outer_jet(a, axis, m)?,
            apply_outer_jet(b, axis, m)?,
        )),
        Expr::Binary(BinOp::Sub, a, b) => Ok(Expr::sub(
            apply_outer_jet(a, axis, m)?,
            apply_outer_jet(b, axis, m)?,
        )),
        Expr::Binary(BinOp::Mul, a, b) => match (a.as_const(), b.as_const()) {
            (Some(_), _) => Ok(Expr::mul(a.as_ref().clone(), apply_outer_jet(b, axis, m)?)),
            (_, Some(_)) => Ok(Expr::mul(apply_outer_jet(a, axis, m)?, b.as_ref().clone())),
            _ => Err(not_linear()),
        },
        Expr::Binary(BinOp::Div, a, b) if b.as_const().is_some() => {
            Ok(Expr::div(apply_outer_jet(a, axis, m)?, b.as_ref().clone()))
        }
        _ => Err(not_linear()),
    }
}
