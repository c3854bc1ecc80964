use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fravar::fracops::FractionalOrder;

#[derive(Debug, Parser)]
#[command(
    name = "fravar",
    version,
    about = "Fractional variational calculus toolkit"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Tolerance (quadrature accuracy and pass/fail threshold). Overrides FRAVAR_TOL.
    #[arg(long, global = true, value_parser = parse_tol)]
    pub tol: Option<f64>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Modified Riemann-Liouville derivative of f(x) at one or more points.
    Deriv(PointOp),
    /// Riemann-Liouville integral of f(x) at one or more points.
    Integral(IntegralOp),
    /// Apply a discrete Grünwald-Letnikov operator to a field CSV.
    FieldOp(FieldOp),
    /// Euler-Lagrange residual of a Lagrangian on sampled fields.
    Elcheck(Elcheck),
    /// Fractional action functional of a Lagrangian.
    Functional(FunctionalCmd),
    /// Compare the first variation with the discrete gradient.
    Stationarity(Stationarity),
    /// Resolution-ladder probes of fractional calculus identities.
    Probe {
        #[command(subcommand)]
        kind: Probe,
    },
    /// Semi-inverse identification and verification on the worked systems.
    Semiinverse {
        #[command(subcommand)]
        kind: Semiinverse,
    },
    /// Export the worked systems as expression text plus metadata.
    Fixtures {
        /// Only this system.
        #[arg(long)]
        system: Option<String>,
    },
}

/// An expression given inline or read from a file.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ExprSource {
    /// Expression in the Lagrangian DSL.
    #[arg(long)]
    pub expr: Option<String>,

    /// File holding the expression.
    #[arg(long)]
    pub expr_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PointOp {
    /// Order in (0, 1].
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,

    #[command(flatten)]
    pub source: ExprSource,

    /// Interval [a, b]; f is a function of `x` (or `t`).
    #[arg(long, num_args = 2, required = true, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Vec<f64>,

    /// Evaluation points.
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    pub at: Vec<f64>,

    /// Treat f as not continuously differentiable.
    #[arg(long)]
    pub rough: bool,
}

#[derive(Debug, Args)]
pub struct IntegralOp {
    #[command(flatten)]
    pub point: PointOp,

    /// Integrate against (dξ)^α instead of the Riemann-Liouville kernel.
    #[arg(long)]
    pub dxa: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpKind {
    Derivative,
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    T,
    X,
}

#[derive(Debug, Args)]
pub struct FieldOp {
    /// Input field CSV.
    #[arg(long)]
    pub field: PathBuf,

    #[arg(long, value_enum, default_value = "derivative")]
    pub op: OpKind,

    /// Operator order in (0, 1].
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,

    /// Axis of a 2D field.
    #[arg(long, value_enum, default_value = "t")]
    pub axis: AxisArg,

    /// Number of composed applications, 1..=4.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub compose: u8,

    /// Apply the adjoint instead.
    #[arg(long)]
    pub adjoint: bool,
}

/// A Lagrangian, its fields and orders.
#[derive(Debug, Args)]
pub struct Problem {
    /// Lagrangian density in the DSL.
    #[arg(long, conflicts_with = "expr_file")]
    pub lagrangian: Option<String>,

    /// File holding the Lagrangian density.
    #[arg(long)]
    pub expr_file: Option<PathBuf>,

    /// Field CSV, as `name=path.csv` or `path.csv` (named by the file stem).
    #[arg(long = "field")]
    pub fields: Vec<String>,

    /// Named parameter, `name=value`.
    #[arg(long = "param")]
    pub params: Vec<String>,

    /// Time order in (0, 1].
    #[arg(long, value_parser = parse_order)]
    pub alpha: FractionalOrder,

    /// Space order in (0, 1]; defaults to alpha.
    #[arg(long, value_parser = parse_order)]
    pub beta: Option<FractionalOrder>,
}

#[derive(Debug, Args)]
pub struct Elcheck {
    #[command(flatten)]
    pub problem: Problem,

    /// Field the residual is taken with respect to.
    #[arg(long)]
    pub wrt: String,
}

#[derive(Debug, Args)]
pub struct FunctionalCmd {
    #[command(flatten)]
    pub problem: Problem,

    /// Grid when no fields are given: `a b n` for a line, `a b n c d m` for a rectangle.
    #[arg(long, num_args = 3..=6, allow_negative_numbers = true)]
    pub grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct Stationarity {
    #[command(flatten)]
    pub problem: Problem,

    #[arg(long)]
    pub wrt: String,

    /// Perturbation direction as an expression in `t`, `x`; multiplied by a
    /// bump vanishing on the boundary.
    #[arg(long, default_value = "1")]
    pub eta: String,

    /// Finite-difference step; defaults to 1e-6 scaled by the field magnitude.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Ladder {
    /// Cell counts of the resolution ladder.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
    pub ns: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Probe {
    /// Fractional Green identity on a rectangle for P(t,x), Q(t,x).
    Green {
        /// Order in (0, 1].
        #[arg(long, value_parser = parse_order)]
        alpha: FractionalOrder,
        /// Space order; defaults to alpha.
        #[arg(long, value_parser = parse_order)]
        beta: Option<FractionalOrder>,
        /// P(t, x).
        #[arg(long, default_value = "t*x")]
        p: String,
        /// Q(t, x).
        #[arg(long, default_value = "t^2 + x")]
        q: String,
        /// Rectangle `a b c d` (t in [a,b], x in [c,d]).
        #[arg(long, num_args = 4, default_values_t = [0.0, 1.0, 0.0, 1.0], allow_negative_numbers = true)]
        rect: Vec<f64>,
        #[command(flatten)]
        ladder: Ladder,
    },
    /// Fractional Leibniz rule for f(x), g(x).
    Leibniz {
        /// Order in (0, 1].
        #[arg(long, value_parser = parse_order)]
        alpha: FractionalOrder,
        /// f(x).
        #[arg(long, default_value = "x")]
        f: String,
        /// g(x).
        #[arg(long, default_value = "x")]
        g: String,
        /// Interval `a b`.
        #[arg(long, num_args = 2, default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
        interval: Vec<f64>,
        #[command(flatten)]
        ladder: Ladder,
    },
    /// Fractional chain rule for h(u(x)).
    Chain {
        /// Order in (0, 1].
        #[arg(long, value_parser = parse_order)]
        beta: FractionalOrder,
        /// Inner function u(x).
        #[arg(long, default_value = "sin(x) + x")]
        u: String,
        /// Outer function: square_half, sin, cos or exp.
        #[arg(long, default_value = "square_half")]
        outer: String,
        /// Interval `a b`.
        #[arg(long, num_args = 2, default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
        interval: Vec<f64>,
        #[command(flatten)]
        ladder: Ladder,
    },
    /// Euler-Lagrange residual against the discrete gradient.
    ElDiscrepancy {
        /// Lagrangian density in the DSL.
        #[arg(long)]
        lagrangian: String,
        /// Field the residual is taken with respect to.
        #[arg(long)]
        wrt: String,
        /// Sampled field, `name=expr` in `t` (and `x` on a rectangle).
        #[arg(long = "sample", required = true)]
        samples: Vec<String>,
        /// Named parameter, `name=value`.
        #[arg(long = "param")]
        params: Vec<String>,
        /// Order in (0, 1].
        #[arg(long, value_parser = parse_order)]
        alpha: FractionalOrder,
        /// Space order; without it the problem lives on a line.
        #[arg(long, value_parser = parse_order)]
        beta: Option<FractionalOrder>,
        /// Domain `a b` for a line or `a b c d` for a rectangle.
        #[arg(long, num_args = 2..=4, allow_negative_numbers = true)]
        domain: Vec<f64>,
        #[command(flatten)]
        ladder: Ladder,
    },
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// oscillator, pendulum, burgers or kdv.
    #[arg(long)]
    pub system: String,
    #[arg(long, value_parser = parse_order, default_value = "0.5")]
    pub alpha: FractionalOrder,
    #[arg(long, value_parser = parse_order, default_value = "0.5")]
    pub beta: FractionalOrder,
    /// Cells per axis.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Semiinverse {
    /// Identify the completion term by least squares on constraint samples.
    Identify {
        #[command(flatten)]
        sys: SystemArgs,
        /// Number of sampled field sets.
        #[arg(long, default_value_t = 4)]
        samples: usize,
        /// Comma-separated basis; defaults to the system's own.
        #[arg(long, value_delimiter = ',')]
        basis: Vec<String>,
    },
    /// Check that the completed Lagrangian recovers the target equation.
    Verify {
        #[command(flatten)]
        sys: SystemArgs,
    },
}

pub fn parse_order(s: &str) -> Result<FractionalOrder, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    FractionalOrder::new(v).map_err(|e| e.to_string())
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("tolerance `{s}` must be a positive number")),
    }
}
