use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fractional order {0} outside the admissible range {1}")]
    InvalidOrder(f64, &'static str),

    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),

    #[error("point {x} outside interval [{a}, {b}]")]
    OutOfInterval { x: f64, a: f64, b: f64 },

    #[error("quadrature did not converge (last two estimates {prev} and {last})")]
    NonConvergence { prev: f64, last: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value {value} at node {node}")]
    NonFiniteSample { node: usize, value: f64 },

    #[error("composition count {0} outside 1..=4")]
    CompositionRange(usize),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("unbound symbol `{0}`")]
    Unbound(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("expression evaluated to a non-finite value")]
    NonFinite,

    #[error("axis `{0}` is not available on this grid")]
    AxisUnavailable(char),

    #[error("unresolved placeholder `{0}` in Lagrangian")]
    UnresolvedPlaceholder(String),

    #[error("expression is not linear in jet variables: {0}")]
    NotJetLinear(String),

    #[error("least-squares system is rank deficient (condition estimate {0:e})")]
    RankDeficient(f64),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field file: {0}")]
    FieldFormat(String),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::RankDeficient(_)
                | Error::NonFinite
                | Error::NonFiniteSample { .. }
                | Error::DivisionByZero
                | Error::GammaPole(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
