use thiserror::Error;

pub type Result<T> = std::result::Result<T, CalmnessError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalmnessError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point is infeasible: constraint {label} violated by {violation:e}")]
    Infeasible { label: String, violation: f64 },

    #[error("matrix is singular (|det| = {det:e}, threshold {threshold:e})")]
    Singular { det: f64, threshold: f64 },

    #[error("halfspace normal vector is zero")]
    ZeroNormal,

    #[error("simplex pivot breakdown at basis {basis:?}: {reason}")]
    PivotBreakdown { basis: Vec<usize>, reason: String },

    #[error("auxiliary program is unbounded (box radius {radius})")]
    UnboundedAuxiliary { radius: f64 },

    #[error("point is not optimal: KKT residual {residual:e}")]
    NotOptimal { residual: f64 },

    #[error("nominal problem has no unique solution: {0}")]
    NotUnique(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("active set too large: {distinct} distinct directions (limit {limit})")]
    TooLarge { distinct: usize, limit: usize },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl CalmnessError {
    pub(crate) fn dim(expected: usize, found: usize) -> Self {
        CalmnessError::DimensionMismatch { expected, found }
    }
}
