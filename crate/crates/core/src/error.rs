use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid phase-space dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix exponential overflow for t = {t} (norm of Z·t = {norm:e})")]
    Overflow { t: f64, norm: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("moment ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error(
        "classical covariance block is singular (condition number {condition:e}); \
         regularize it by adding a small multiple of the identity"
    )]
    SingularClassicalBlock { condition: f64 },

    #[error("{what} is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositive {
        what: &'static str,
        min_eigenvalue: f64,
    },

    #[error("times must be strictly ascending and positive")]
    NonAscendingTimes,

    #[error("time {0} was not recorded in the ensemble")]
    UnknownTime(f64),

    #[error("unsupported request: {0}")]
    Unsupported(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
