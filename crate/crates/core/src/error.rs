use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("{what} = {value} is outside its domain {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate transform: {0}")]
    DegenerateTransform(String),

    #[error("transform is not piecewise monotone: {0}")]
    NotPiecewiseMonotone(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("copula has no closed-form distribution function: {0}")]
    MissingCdf(String),

    #[error("copula has no density: {0}")]
    MissingDensity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample has ties in {axis} and the tie policy is reject")]
    Ties { axis: &'static str },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("invalid randomizer kernel: {0}")]
    InvalidKernel(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid model specification: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Self {
        Error::OutOfDomain {
            what,
            value,
            domain,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::Calibration(_) | Error::DegenerateTransform(_)
        )
    }
}
