use std::collections::HashMap;

use super::{Axis, BinOp, Expr, Func, JetVar};
use crate::error::{Error, Result};

/// Values for the leaves of an expression.
pub trait Env {
    fn jet(&self, v: &JetVar) -> Option<f64>;
    fn coord(&self, axis: Axis) -> Option<f64>;
}

/// A plain map-backed [`Env`].
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    jets: HashMap<JetVar, f64>,
    t: Option<f64>,
    x: Option<f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_jet(mut self, v: JetVar, value: f64) -> Self {
        self.jets.insert(v, value);
        self
    }

    /// Bind a bare identifier (field, parameter or exogenous function).
    pub fn with_name(self, name: &str, value: f64) -> Self {
        self.with_jet(JetVar::field(name), value)
    }

    pub fn with_coord(mut self, axis: Axis, value: f64) -> Self {
        match axis {
            Axis::T => self.t = Some(value),
            Axis::X => self.x = Some(value),
        }
        self
    }

    pub fn set(&mut self, v: JetVar, value: f64) {
        self.jets.insert(v, value);
    }
}

impl Env for Bindings {
    fn jet(&self, v: &JetVar) -> Option<f64> {
        self.jets.get(v).copied()
    }

    fn coord(&self, axis: Axis) -> Option<f64> {
        match axis {
            Axis::T => self.t,
            Axis::X => self.x,
        }
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite)
    }
}

/// Evaluate `e` with every leaf looked up in `env`.
pub fn evaluate(e: &Expr, env: &impl Env) -> Result<f64> {
    finite(eval_rec(e, env)?)
}

fn eval_rec(e: &Expr, env: &impl Env) -> Result<f64> {
    Ok(match e {
        Expr::Num(c) => *c,
        Expr::Coord(a) => env
            .coord(*a)
            .ok_or_else(|| Error::Unbound(a.name().to_string()))?,
        Expr::Jet(v) => env.jet(v).ok_or_else(|| Error::Unbound(v.to_string()))?,
        Expr::Neg(a) => -eval_rec(a, env)?,
        Expr::Binary(op, a, b) => {
            let (a, b) = (eval_rec(a, env)?, eval_rec(b, env)?);
            binary(*op, a, b)?
        }
        Expr::Pow(a, n) => power(eval_rec(a, env)?, *n)?,
        Expr::Call(f, a) => f.apply(eval_rec(a, env)?),
    })
}

fn binary(op: BinOp, a: f64, b: f64) -> Result<f64> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(Error::DivisionByZero);
            }
            a / b
        }
    })
}

fn power(a: f64, n: i32) -> Result<f64> {
    if a == 0.0 && n < 0 {
        return Err(Error::DivisionByZero);
    }
    Ok(a.powi(n))
}

/// How a jet variable is resolved when compiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leaf {
    /// Index into the per-node jet value slice.
    Slot(usize),
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Slot(usize),
    T,
    X,
    Neg,
    Bin(BinOp),
    Pow(i32),
    Call(Func),
}

/// An expression lowered to a postfix program over numbered jet slots,
/// for evaluation at many grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    depth: usize,
}

impl CompiledExpr {
    /// Lower `e`. Every jet variable must resolve; the `x` coordinate is
    /// only allowed when `x_available`.
    pub fn compile(
        e: &Expr,
        resolve: &impl Fn(&JetVar) -> Option<Leaf>,
        x_available: bool,
    ) -> Result<Self> {
        let mut ops = Vec::with_capacity(e.size());
        lower(e, resolve, x_available, &mut ops)?;
        let (mut cur, mut depth) = (0usize, 0usize);
        for op in &ops {
            match op {
                Op::Const(_) | Op::Slot(_) | Op::T | Op::X => cur += 1,
                Op::Bin(_) => cur -= 1,
                _ => {}
            }
            depth = depth.max(cur);
        }
        Ok(CompiledExpr { ops, depth })
    }

    /// Evaluate with jet values `jets` at coordinates `(t, x)`.
    pub fn eval(&self, jets: &[f64], t: f64, x: f64) -> Result<f64> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Slot(i) => stack.push(jets[i]),
                Op::T => stack.push(t),
                Op::X => stack.push(x),
                Op::Neg => {
                    let v = stack.pop().expect("stack");
                    stack.push(-v);
                }
                Op::Bin(b) => {
                    let r = stack.pop().expect("stack");
                    let l = stack.pop().expect("stack");
                    stack.push(binary(b, l, r)?);
                }
                Op::Pow(n) => {
                    let v = stack.pop().expect("stack");
                    stack.push(power(v, n)?);
                }
                Op::Call(f) => {
                    let v = stack.pop().expect("stack");
                    stack.push(f.apply(v));
                }
            }
        }
        finite(stack.pop().expect("stack"))
    }
}

fn lower(
    e: &Expr,
    resolve: &impl Fn(&JetVar) -> Option<Leaf>,
    x_available: bool,
    ops: &mut Vec<Op>,
) -> Result<()> {
    match e {
        Expr::Num(c) => ops.push(Op::Const(*c)),
        Expr::Coord(Axis::T) => ops.push(Op::T),
        Expr::Coord(Axis::X) => {
            if !x_available {
                return Err(Error::AxisUnavailable('x'));
            }
            ops.push(Op::X)
        }
        Expr::Jet(v) => match resolve(v) {
            Some(Leaf::Slot(i)) => ops.push(Op::Slot(i)),
            Some(Leaf::Const(c)) => ops.push(Op::Const(c)),
            None => return Err(Error::Unbound(v.to_string())),
        },
        Expr::Neg(a) => {
            lower(a, resolve, x_available, ops)?;
            ops.push(Op::Neg);
        }
        Expr::Binary(op, a, b) => {
            lower(a, resolve, x_available, ops)?;
            lower(b, resolve, x_available, ops)?;
            ops.push(Op::Bin(*op));
        }
        Expr::Pow(a, n) => {
            lower(a, resolve, x_available, ops)?;
            ops.push(Op::Pow(*n));
        }
        Expr::Call(f, a) => {
            lower(a, resolve, x_available, ops)?;
            ops.push(Op::Call(*f));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn pendulum_value() {
        let e = parse("D[y,t,1]^2/2 + cos(y)").unwrap();
        let env = Bindings::new()
            .with_name("y", 0.0)
            .with_jet(JetVar::derivative("y", Axis::T, 1), 2.0);
        assert_eq!(evaluate(&e, &env).unwrap(), 3.0);
    }

    #[test]
    fn constants_need_no_bindings() {
        assert_eq!(
            evaluate(&parse("7").unwrap(), &Bindings::new()).unwrap(),
            7.0
        );
    }

    #[test]
    fn errors() {
        let env = Bindings::new().with_name("y", 0.0);
        assert_eq!(
            evaluate(&parse("1/y").unwrap(), &env),
            Err(Error::DivisionByZero)
        );
        assert_eq!(
            evaluate(&parse("y^-1").unwrap(), &env),
            Err(Error::DivisionByZero)
        );
        assert_eq!(
            evaluate(&parse("z + 1").unwrap(), &env),
            Err(Error::Unbound("z".into()))
        );
        assert_eq!(
            evaluate(&parse("t").unwrap(), &env),
            Err(Error::Unbound("t".into()))
        );
        assert_eq!(
            evaluate(&parse("exp(y + 1000)").unwrap(), &env),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let e = parse("sin(a*t) - b^3/(1 + x*x) + exp(-D[a,x,2])*mgl").unwrap();
        let slots = [
            JetVar::field("a"),
            JetVar::field("b"),
            JetVar::derivative("a", Axis::X, 2),
        ];
        let c = CompiledExpr::compile(
            &e,
            &|v| {
                if v.field == "mgl" {
                    Some(Leaf::Const(2.5))
                } else {
                    slots.iter().position(|s| s == v).map(Leaf::Slot)
                }
            },
            true,
        )
        .unwrap();
        let vals = [0.3, -1.2, 0.7];
        let env = Bindings::new()
            .with_jet(slots[0].clone(), vals[0])
            .with_jet(slots[1].clone(), vals[1])
            .with_jet(slots[2].clone(), vals[2])
            .with_name("mgl", 2.5)
            .with_coord(Axis::T, 0.4)
            .with_coord(Axis::X, 1.1);
        assert_eq!(
            c.eval(&vals, 0.4, 1.1).unwrap(),
            evaluate(&e, &env).unwrap()
        );
        assert!(matches!(
            CompiledExpr::compile(&e, &|_| Some(Leaf::Const(1.0)), false),
            Err(Error::AxisUnavailable('x'))
        ));
    }
}
