use thiserror::Error;

/// Errors raised by the solver, its projections and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The bounds admit no plan: `c * b_l <= n <= c * b_u` fails.
    #[error("empty constraint set: n={n}, c={c}, b_l={b_l}, b_u={b_u} (need c*b_l <= n <= c*b_u)")]
    EmptyConstraintSet { n: usize, c: usize, b_l: f64, b_u: f64 },

    #[error("initial plan is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("step size {0} outside [0, 1]")]
    InvalidStep(f64),

    #[error("entropic kernel overflow: {0}")]
    KernelOverflow(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(
    op: &'static str,
    expected: (usize, usize),
    got: (usize, usize),
) -> Error {
    Error::DimensionMismatch {
        op,
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}
