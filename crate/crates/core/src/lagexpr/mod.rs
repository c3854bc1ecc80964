//! Lagrangian densities over jet variables.
//!
//! Grammar (whitespace and `#` line comments are ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? INT)*
//! primary := NUMBER | 't' | 'x' | IDENT | 'D' '[' IDENT ',' ('t'|'x') ',' INT ']'
//!          | FUNC '(' expr ')' | '(' expr ')'
//! FUNC    := sin | cos | exp
//! ```
//!
//! `D[f,t,m]` is the m-fold composed time derivative `D_t^α ∘ … ∘ D_t^α f`
//! (and `D[f,x,n]` likewise in space, order β), with `1 ≤ m ≤ 4`. A bare
//! identifier is a field, a named parameter or an exogenous sampled
//! function; which one is decided when the expression is bound.
//!
//! Unary minus binds looser than `^`, so `-a^2` is `-(a^2)`.

mod diff;
mod eval;
mod format;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use diff::{apply_outer_jet, partial_jet};
pub use eval::{evaluate, Bindings, CompiledExpr, Env, Leaf};
pub use format::format;
pub use parser::parse;

pub use crate::fracgrid::Axis;

/// Largest multiplicity allowed in `D[f,axis,m]`.
pub const MAX_MULTIPLICITY: u8 = 4;

/// A field or one of its composed fractional derivatives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JetVar {
    pub field: String,
    pub axis: Option<Axis>,
    pub multiplicity: u8,
}

impl JetVar {
    /// The field itself.
    pub fn field(name: impl Into<String>) -> Self {
        JetVar {
            field: name.into(),
            axis: None,
            multiplicity: 0,
        }
    }

    /// `D[name, axis, m]`. Panics unless `1 ≤ m ≤ 4`.
    pub fn derivative(name: impl Into<String>, axis: Axis, m: u8) -> Self {
        assert!((1..=MAX_MULTIPLICITY).contains(&m), "multiplicity {m}");
        JetVar {
            field: name.into(),
            axis: Some(axis),
            multiplicity: m,
        }
    }

    pub fn is_field(&self) -> bool {
        self.multiplicity == 0
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.axis {
            None => write!(f, "{}", self.field),
            Some(a) => write!(f, "D[{},{},{}]", self.field, a, self.multiplicity),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }

    /// Derivative of the function at `v`.
    pub fn derivative(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.cos(),
            Func::Cos => -v.sin(),
            Func::Exp => v.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Numeric literals are finite and non-negative; negative
/// constants are `Neg(Num(..))`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(Axis),
    Jet(JetVar),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

// Folding constructors. Only constant folding and the identities with 0 and 1
// are applied; there is no other simplification.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(c: f64) -> Expr {
        if c < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-c)))
        } else if c == 0.0 {
            Expr::Num(0.0)
        } else {
            Expr::Num(c)
        }
    }

    pub fn jet(v: JetVar) -> Expr {
        Expr::Jet(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Jet(JetVar::field(name))
    }

    /// The value of an expression with no leaves other than literals.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Num(c) => Some(*c),
            Expr::Neg(e) => e.as_const().map(|c| -c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::num(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::num(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::num(x * y),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::num(0.0),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(x), None) => match b {
                // c1 * (c2 * e) -> (c1 c2) * e
                Expr::Binary(BinOp::Mul, l, r) if l.as_const().is_some() => {
                    Expr::mul(Expr::num(x * l.as_const().unwrap_or(1.0)), *r)
                }
                _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
            },
            _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::num(x / y),
            (Some(x), _) if x == 0.0 && !b.is_zero() => Expr::num(0.0),
            _ if b.is_one() => a,
            _ => Expr::Binary(BinOp::Div, Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Num(0.0) => Expr::Num(0.0),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(e: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::num(1.0);
        }
        if n == 1 {
            return e;
        }
        match e.as_const() {
            Some(c) if c != 0.0 || n > 0 => Expr::num(c.powi(n)),
            _ => Expr::Pow(Box::new(e), n),
        }
    }

    pub fn call(f: Func, e: Expr) -> Expr {
        Expr::Call(f, Box::new(e))
    }

    /// Every jet variable (including bare identifiers) in the expression.
    pub fn jet_vars(&self) -> BTreeSet<JetVar> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Jet(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Whether the coordinate `axis` appears.
    pub fn uses_coord(&self, axis: Axis) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if *e == Expr::Coord(axis) {
                found = true;
            }
        });
        found
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Coord(_) | Expr::Jet(_) => {}
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Replace every occurrence of the bare identifier `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        self.substitute_jets(&mut |v| (v.is_field() && v.field == name).then(|| with.clone()))
    }

    /// Rebuild the tree, replacing jet variables for which `f` returns a value.
    pub fn substitute_jets(&self, f: &mut impl FnMut(&JetVar) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(_) | Expr::Coord(_) => self.clone(),
            Expr::Jet(v) => f(v).unwrap_or_else(|| self.clone()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute_jets(f))),
            Expr::Pow(e, n) => Expr::Pow(Box::new(e.substitute_jets(f)), *n),
            Expr::Call(g, e) => Expr::Call(*g, Box::new(e.substitute_jets(f))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute_jets(f)),
                Box::new(b.substitute_jets(f)),
            ),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(self))
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Expr> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_constructors() {
        let y = Expr::var("y");
        assert_eq!(Expr::add(Expr::num(0.0), y.clone()), y);
        assert_eq!(Expr::mul(Expr::num(1.0), y.clone()), y);
        assert_eq!(Expr::mul(Expr::num(0.0), y.clone()), Expr::num(0.0));
        assert_eq!(
            Expr::sub(Expr::num(0.0), y.clone()),
            Expr::Neg(Box::new(y.clone()))
        );
        assert_eq!(Expr::num(-2.0), Expr::Neg(Box::new(Expr::Num(2.0))));
        assert_eq!(Expr::pow(y.clone(), 1), y);
        assert_eq!(
            Expr::mul(Expr::num(0.5), Expr::mul(Expr::num(2.0), y.clone())),
            y
        );
        // division by a literal zero is kept so evaluation can report it
        assert!(matches!(
            Expr::div(Expr::num(0.0), Expr::num(0.0)),
            Expr::Binary(BinOp::Div, _, _)
        ));
    }

    #[test]
    fn substitution() {
        let e = parse("u*D[phi,t,1] + G").unwrap();
        let done = e.substitute("G", &parse("u^3").unwrap());
        assert_eq!(done, parse("u*D[phi,t,1] + u^3").unwrap());
        assert_eq!(done.jet_vars().len(), 2);
    }
}
