//! Semi-inverse construction of variational principles: trial Lagrangians
//! with an unknown completion term, potential-field constraints, least-squares
//! identification of the completion, and recovery checks on the four worked
//! systems.

mod identify;
mod verify;

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lagexpr::{format, parse, Axis, Expr, JetVar};

pub use identify::{
    constraint_samples, el_jet_form, identify_completion, substitute_constraints, Identification,
    MonomialAnsatz,
};
pub use verify::{
    constraint_residual, potential_from_field, target_residual, verify_el_recovery,
    ConstraintResidual, RecoveryReport,
};

/// `D[field, axis, 1] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: JetVar,
    pub rhs: Expr,
}

/// One term `coef · D_axis^(m·order)(expr)` (or `coef · expr` without an
/// operator) of a target residual.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTerm {
    pub coef: f64,
    pub op: Option<(Axis, u8)>,
    pub expr: Expr,
}

/// A worked system: its trial Lagrangian, constraints, expected completion
/// and the residual its Euler-Lagrange equation should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemFixture {
    pub name: String,
    pub trial_lagrangian: Expr,
    /// Name of the unknown completion term in the trial Lagrangian.
    pub placeholder: Option<String>,
    /// Field the identification takes the Euler-Lagrange equation in.
    pub unknown: Option<String>,
    /// Exogenous sampled function entering the constraints (e.g. `F`).
    pub exogenous: Option<String>,
    pub constraints: Vec<Constraint>,
    pub expected_completion: Option<Expr>,
    /// Field whose Euler-Lagrange residual recovers the target equation.
    pub target_wrt: String,
    pub target_residual: Vec<TargetTerm>,
    /// Density of the constrained action reported by verification.
    pub constrained_functional: Expr,
    pub parameters: BTreeMap<String, f64>,
    /// Whether the system lives on a 1D time line rather than a plane.
    pub line: bool,
    pub default_basis: Vec<&'static str>,
}

/// Names accepted by [`builtin_system`].
pub const SYSTEMS: [&str; 4] = ["oscillator", "pendulum", "burgers", "kdv"];

fn p(src: &str) -> Expr {
    parse(src).expect("built-in expression parses")
}

fn term(coef: f64, op: Option<(Axis, u8)>, src: &str) -> TargetTerm {
    TargetTerm {
        coef,
        op,
        expr: p(src),
    }
}

/// One of the four worked systems.
pub fn builtin_system(name: &str) -> Result<SystemFixture> {
    let fx = match name {
        "oscillator" => {
            let l = p("0.5*D[theta,t,1]^2 - 0.5*mgl*theta^2");
            SystemFixture {
                name: name.into(),
                trial_lagrangian: l.clone(),
                placeholder: None,
                unknown: None,
                exogenous: None,
                constraints: vec![],
                expected_completion: None,
                target_wrt: "theta".into(),
                // -(D^{2α}θ + mgl θ): the Euler-Lagrange equation taken
                // literally, which has the opposite potential sign to the
                // printed oscillator equation
                target_residual: vec![term(-1.0, None, "D[theta,t,2] + mgl*theta")],
                constrained_functional: l,
                parameters: BTreeMap::from([("mgl".to_string(), 1.5)]),
                line: true,
                default_basis: vec![],
            }
        }
        "pendulum" => {
            let l = p("D[y,t,1]^2/2 + cos(y)");
            SystemFixture {
                name: name.into(),
                trial_lagrangian: l.clone(),
                placeholder: None,
                unknown: None,
                exogenous: None,
                constraints: vec![],
                expected_completion: None,
                target_wrt: "y".into(),
                target_residual: vec![term(-1.0, None, "D[y,t,2] + sin(y)")],
                constrained_functional: l,
                parameters: BTreeMap::new(),
                line: true,
                default_basis: vec![],
            }
        }
        "burgers" => SystemFixture {
            name: name.into(),
            trial_lagrangian: p("u*D[phi,t,1] - (u^2/2 + F)*D[phi,x,1] + G"),
            placeholder: Some("G".into()),
            unknown: Some("u".into()),
            exogenous: Some("F".into()),
            constraints: vec![
                Constraint {
                    lhs: JetVar::derivative("phi", Axis::X, 1),
                    rhs: p("u"),
                },
                Constraint {
                    lhs: JetVar::derivative("phi", Axis::T, 1),
                    rhs: p("u^2/2 + F"),
                },
            ],
            expected_completion: Some(p("u^3/6 - F*u")),
            target_wrt: "phi".into(),
            target_residual: vec![
                term(-1.0, Some((Axis::T, 1)), "u"),
                term(1.0, Some((Axis::X, 1)), "u^2/2 + F"),
            ],
            constrained_functional: p("u^3/6 - F*u"),
            parameters: BTreeMap::new(),
            line: false,
            default_basis: vec!["u", "u^2", "u^3", "F*u", "u*D[u,x,2]"],
        },
        "kdv" => {
            let completed = p("u*D[phi,t,1] - (3*u^2 + D[u,x,2])*D[phi,x,1] + u^3");
            SystemFixture {
                name: name.into(),
                trial_lagrangian: p("u*D[phi,t,1] - (3*u^2 + D[u,x,2])*D[phi,x,1] + F"),
                placeholder: Some("F".into()),
                unknown: Some("u".into()),
                exogenous: None,
                constraints: vec![
                    Constraint {
                        lhs: JetVar::derivative("phi", Axis::X, 1),
                        rhs: p("u"),
                    },
                    Constraint {
                        lhs: JetVar::derivative("phi", Axis::T, 1),
                        rhs: p("3*u^2 + D[u,x,2]"),
                    },
                ],
                expected_completion: Some(p("u^3")),
                target_wrt: "phi".into(),
                target_residual: vec![
                    term(-1.0, Some((Axis::T, 1)), "u"),
                    term(1.0, Some((Axis::X, 1)), "3*u^2 + D[u,x,2]"),
                ],
                constrained_functional: completed,
                parameters: BTreeMap::new(),
                line: false,
                default_basis: vec!["u", "u^2", "u^3", "u*D[u,x,2]"],
            }
        }
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    Ok(fx)
}

impl SystemFixture {
    /// The trial Lagrangian with the placeholder replaced by `completion`.
    pub fn complete_with(&self, completion: &Expr) -> Expr {
        match &self.placeholder {
            Some(name) => self.trial_lagrangian.substitute(name, completion),
            None => self.trial_lagrangian.clone(),
        }
    }

    /// The trial Lagrangian completed with the expected completion.
    pub fn completed_lagrangian(&self) -> Result<Expr> {
        match (&self.placeholder, &self.expected_completion) {
            (None, _) => Ok(self.trial_lagrangian.clone()),
            (Some(_), Some(c)) => Ok(self.complete_with(c)),
            (Some(name), None) => Err(Error::UnresolvedPlaceholder(name.clone())),
        }
    }

    /// Field names the system's Lagrangian and constraints are sampled on.
    pub fn field_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .trial_lagrangian
            .jet_vars()
            .into_iter()
            .map(|v| v.field)
            .filter(|f| Some(f) != self.placeholder.as_ref() && !self.parameters.contains_key(f))
            .collect();
        names.dedup();
        names
    }

    /// Expression text plus metadata.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .target_residual
            .iter()
            .map(|t| {
                json!({
                    "coef": t.coef,
                    "operator": t.op.map(|(a, m)| format!("D[.,{a},{m}]")),
                    "expr": format(&t.expr),
                })
            })
            .collect();
        json!({
            "schema": crate::report::SCHEMA,
            "kind": "fixture",
            "system": self.name,
            "trial_lagrangian": format(&self.trial_lagrangian),
            "placeholder": self.placeholder,
            "unknown": self.unknown,
            "exogenous": self.exogenous,
            "constraints": self.constraints.iter().map(|c| json!({
                "lhs": c.lhs.to_string(),
                "rhs": format(&c.rhs),
            })).collect::<Vec<_>>(),
            "expected_completion": self.expected_completion.as_ref().map(format),
            "target_wrt": self.target_wrt,
            "target_residual": terms,
            "constrained_functional": format(&self.constrained_functional),
            "parameters": self.parameters,
            "axes": if self.line { 1 } else { 2 },
            "default_basis": self.default_basis,
        })
    }
}
