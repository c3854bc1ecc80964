use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::SystemFixture;
use crate::error::{Error, Result};
use crate::fracgrid::{Field, Grid2D};
use crate::jets::{apply_derivative, eval_pointwise, FieldSet, JetTable, Orders};
use crate::lagexpr::{apply_outer_jet, parse, partial_jet, Axis, Expr, JetVar};

/// Candidate completion terms, each with the label used in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialAnsatz {
    labels: Vec<String>,
    basis: Vec<Expr>,
}

impl MonomialAnsatz {
    pub fn new(sources: &[&str]) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::InvalidArgument("empty ansatz".into()));
        }
        let basis = sources
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(MonomialAnsatz {
            labels: sources.iter().map(|s| s.to_string()).collect(),
            basis,
        })
    }

    pub fn default_for(fixture: &SystemFixture) -> Result<Self> {
        Self::new(&fixture.default_basis)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basis(&self) -> &[Expr] {
        &self.basis
    }
}

/// Identified completion coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    /// RMS of the fitted equation over all sample nodes.
    pub residual_rms: f64,
    /// Smallest over largest singular value of the equilibrated system.
    pub condition_ratio: f64,
}

/// Coefficients below this magnitude are reported as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-8;

/// Singular-value ratio below which the system counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

impl Identification {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.coefficients[i])
    }

    /// The completion `Σ c_i B_i` over the nonzero coefficients.
    pub fn completion(&self, ansatz: &MonomialAnsatz) -> Expr {
        self.coefficients
            .iter()
            .zip(ansatz.basis())
            .filter(|(c, _)| **c != 0.0)
            .fold(Expr::num(0.0), |acc, (c, b)| {
                Expr::add(acc, Expr::mul(Expr::num(*c), b.clone()))
            })
    }

    pub fn to_json(&self, system: &str) -> Value {
        let coefficients: serde_json::Map<String, Value> = self
            .labels
            .iter()
            .zip(&self.coefficients)
            .map(|(l, c)| (l.clone(), json!(c)))
            .collect();
        json!({
            "schema": crate::report::SCHEMA,
            "kind": "identification",
            "system": system,
            "coefficients": coefficients,
            "residual_rms": self.residual_rms,
            "condition_ratio": self.condition_ratio,
        })
    }
}

/// The Euler-Lagrange expression of `l` with respect to `wrt` in jet form:
/// every outer derivative is applied symbolically, raising multiplicities.
pub fn el_jet_form(l: &Expr, wrt: &str) -> Result<Expr> {
    let mut acc = Expr::num(0.0);
    for v in l.jet_vars().into_iter().filter(|v| v.field == wrt) {
        let d = partial_jet(l, &v);
        let t = match v.axis {
            None => d,
            Some(axis) => {
                let outer = apply_outer_jet(&d, axis, v.multiplicity)?;
                if v.multiplicity % 2 == 1 {
                    Expr::neg(outer)
                } else {
                    outer
                }
            }
        };
        acc = Expr::add(acc, t);
    }
    Ok(acc)
}

/// Replace derivatives of constrained fields by the constraint right-hand
/// sides: `D[φ,axis,k]` becomes `D_axis^(k-1)` applied (in jet form) to the
/// right-hand side of the `axis` constraint.
pub fn substitute_constraints(e: &Expr, fixture: &SystemFixture) -> Result<Expr> {
    let mut failure = None;
    let out = e.substitute_jets(&mut |v| {
        let c = fixture
            .constraints
            .iter()
            .find(|c| c.lhs.field == v.field && c.lhs.axis == v.axis && v.axis.is_some())?;
        let axis = v.axis?;
        let k = v.multiplicity - c.lhs.multiplicity;
        if k == 0 {
            return Some(c.rhs.clone());
        }
        match apply_outer_jet(&c.rhs, axis, k) {
            Ok(r) => Some(r),
            Err(err) => {
                failure.get_or_insert(err);
                None
            }
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    let constrained: BTreeSet<&str> = fixture
        .constraints
        .iter()
        .map(|c| c.lhs.field.as_str())
        .collect();
    if let Some(v) = out
        .jet_vars()
        .iter()
        .find(|v| constrained.contains(v.field.as_str()))
    {
        return Err(Error::InvalidArgument(format!(
            "`{v}` is not determined by the constraints"
        )));
    }
    Ok(out)
}

/// Least-squares identification of the completion coefficients.
///
/// The Euler-Lagrange equation with respect to the unknown field is formed
/// in jet form for the trial Lagrangian (placeholder set to zero) and for
/// each basis term, the constraints are substituted algebraically, and the
/// requirement that the sum vanishes is imposed at every node of every
/// sample.
pub fn identify_completion(
    fixture: &SystemFixture,
    ansatz: &MonomialAnsatz,
    samples: &[FieldSet],
    orders: Orders,
) -> Result<Identification> {
    let placeholder = fixture.placeholder.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!("system `{}` has no completion term", fixture.name))
    })?;
    let unknown = fixture
        .unknown
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no unknown field".into()))?;
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let constrained: BTreeSet<&str> = fixture
        .constraints
        .iter()
        .map(|c| c.lhs.field.as_str())
        .collect();
    for (label, b) in ansatz.labels.iter().zip(&ansatz.basis) {
        if b.jet_vars()
            .iter()
            .any(|v| constrained.contains(v.field.as_str()))
        {
            return Err(Error::InvalidArgument(format!(
                "basis term `{label}` involves a potential field"
            )));
        }
    }

    let base = fixture
        .trial_lagrangian
        .substitute(placeholder, &Expr::num(0.0));
    let rhs = substitute_constraints(&el_jet_form(&base, unknown)?, fixture)?;
    let columns = ansatz
        .basis
        .iter()
        .map(|b| substitute_constraints(&el_jet_form(b, unknown)?, fixture))
        .collect::<Result<Vec<_>>>()?;
    if rhs
        .jet_vars()
        .iter()
        .any(|v| v.is_field() && v.field == *placeholder)
    {
        return Err(Error::UnresolvedPlaceholder(placeholder.clone()));
    }

    let mut vars: BTreeSet<JetVar> = rhs.jet_vars();
    for c in &columns {
        vars.extend(c.jet_vars());
    }
    let ncol = columns.len();
    let mut a_rows: Vec<f64> = Vec::new();
    let mut b_rows: Vec<f64> = Vec::new();
    for s in samples {
        let table = JetTable::build(s, orders, &vars)?;
        let b = table.eval(&rhs, s)?;
        let cols = columns
            .iter()
            .map(|c| table.eval(c, s))
            .collect::<Result<Vec<_>>>()?;
        for (k, bk) in b.iter().enumerate() {
            a_rows.extend(cols.iter().map(|c| c[k]));
            b_rows.push(-bk);
        }
    }
    let nrow = b_rows.len();
    let mut a = DMatrix::from_row_slice(nrow, ncol, &a_rows);
    let b = DVector::from_vec(b_rows);

    let scales: Vec<f64> = (0..ncol).map(|j| a.column(j).norm()).collect();
    if scales.contains(&0.0) {
        return Err(Error::RankDeficient(0.0));
    }
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let ratio = sv.min() / sv.max();
    if ratio.is_nan() || ratio < RANK_TOLERANCE {
        return Err(Error::RankDeficient(ratio));
    }
    let scaled = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let fit = &a * &scaled - &b;
    let coefficients = scaled
        .iter()
        .zip(&scales)
        .map(|(c, s)| c / s)
        .map(|c| if c.abs() < ZERO_CUTOFF { 0.0 } else { c })
        .collect();
    Ok(Identification {
        labels: ansatz.labels.clone(),
        coefficients,
        residual_rms: fit.norm() / (nrow as f64).sqrt(),
        condition_ratio: ratio,
    })
}

/// `count` constraint-consistent field sets on `grid`.
///
/// Each draws a random polynomial potential `φ` of total degree 4, defines
/// the field named by the `x` constraint as `D_x^β φ`, and, when the system
/// has an exogenous function, solves the `t` constraint for it.
pub fn constraint_samples(
    fixture: &SystemFixture,
    grid: Grid2D,
    orders: Orders,
    count: usize,
    seed: u64,
) -> Result<Vec<FieldSet>> {
    let cx = fixture
        .constraints
        .iter()
        .find(|c| c.lhs.axis == Some(Axis::X))
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` has no constraints", fixture.name)))?;
    let defined = match &cx.rhs {
        Expr::Jet(v) if v.is_field() => v.field.clone(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "x constraint must define a field, got `{other}`"
            )))
        }
    };
    let potential = cx.lhs.field.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut coef = Vec::new();
        for i in 0..=4 {
            for j in 0..=(4 - i) {
                coef.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
        let phi = Field::sample_plane(grid, |t, x| {
            coef.iter()
                .map(|&(i, j, c)| c * t.powi(i) * x.powi(j))
                .sum()
        })?;
        let u = apply_derivative(orders, &phi, Axis::X, 1)?;
        let mut set = FieldSet::new()
            .with_field(potential.clone(), phi.clone())
            .with_field(defined.clone(), u);
        if let Some(ex) = &fixture.exogenous {
            let ct = fixture
                .constraints
                .iter()
                .find(|c| c.lhs.axis == Some(Axis::T))
                .ok_or_else(|| Error::InvalidArgument("no t constraint".into()))?;
            let rest = eval_pointwise(&ct.rhs.substitute(ex, &Expr::num(0.0)), &set, orders)?;
            let dt = apply_derivative(orders, &phi, Axis::T, 1)?;
            set.insert_field(ex.clone(), dt.zip_with(&rest, |a, b| a - b)?);
        }
        out.push(set);
    }
    Ok(out)
}
