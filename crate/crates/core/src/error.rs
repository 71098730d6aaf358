use thiserror::Error;

/// Errors raised by the solver and its file formats.
///
/// Numeric payloads are stored as `f64` whatever scalar type the failing
/// routine ran with.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("rank-2 update leaves the positive definite cone (determinant factor {phi:e})")]
    NotPositiveDefiniteUpdate { phi: f64 },

    #[error("2x2 principal minor of the inverse is not positive ({curvature:e})")]
    DegenerateCurvature { curvature: f64 },

    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailed { backtracks: usize },

    #[error("diagonal entry {} of the covariance is not positive ({value:e})", .index + 1)]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),

    #[error("off-diagonal nonzeros {nnz_off} exceed the sparsity budget {sparsity}")]
    BudgetExceeded { nnz_off: usize, sparsity: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotPositiveDefiniteUpdate { .. } => "NotPositiveDefiniteUpdate",
            Error::DegenerateCurvature { .. } => "DegenerateCurvature",
            Error::LineSearchFailed { .. } => "LineSearchFailed",
            Error::NonPositiveDiagonal { .. } => "NonPositiveDiagonal",
            Error::DegenerateSamples(_) => "DegenerateSamples",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InfeasibleStart(_) => "InfeasibleStart",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IOError",
            Error::Json(_) => "IOError",
        }
    }

    /// True for errors caused by the caller's data rather than the solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveDiagonal { .. }
                | Error::DegenerateSamples(_)
                | Error::DimensionMismatch { .. }
                | Error::InfeasibleStart(_)
                | Error::BudgetExceeded { .. }
                | Error::InvalidConfig(_)
                | Error::Parse { .. }
        )
    }

    pub fn is_io_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
