use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("expansion too shallow: remainder order {remainder_order} + dimension {dim} must be negative")]
    InsufficientDepth { remainder_order: f64, dim: usize },

    #[error("quadrature failed to reach tolerance {tol:e} (estimated error {err:e}) on {what}")]
    Quadrature { what: String, tol: f64, err: f64 },

    #[error("angular quadrature order {order} insufficient: refinement changed the value by {change:e}")]
    QuadratureOrder { order: usize, change: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("evaluation at a pole: s = {s} is within {radius:e} of the pole {pole}")]
    Pole { s: f64, pole: f64, radius: f64 },

    #[error("operator order {order} is an integer in the excluded range")]
    IntegralOrder { order: f64 },

    #[error("sequence is not nonincreasing and positive at index {index}")]
    NonMonotone { index: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("least squares system is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("tabulated angular function has no derivative data")]
    MissingDerivative,

    #[error("inadmissible profile space: {0}")]
    InadmissibleProfile(String),

    #[error("independent routes disagree: {0}")]
    Inconsistent(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::QuadratureOrder { .. }
                | Error::RankDeficient { .. }
                | Error::Inconsistent(_)
        )
    }
}
