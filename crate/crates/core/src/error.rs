use thiserror::Error;

/// Errors produced by the polynomial, root-finding and dynamics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree {degree} exceeds the configured maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("degree must be at least 2 (got {0})")]
    DegreeTooLow(usize),

    #[error("root finder did not converge after {iterations} iterations and a perturbed restart")]
    NoConvergence { iterations: usize },

    #[error("derivative vanishes at {re}{im:+}i")]
    DerivativeVanishes { re: f64, im: f64 },

    #[error("non-finite value after {step} steps of the orbit")]
    NonFinite { step: usize },

    #[error("preimage sums disagree across w samples (spread {spread:e}, tolerance {tol:e})")]
    CInconsistent { spread: f64, tol: f64 },

    #[error("expected {expected} parameters, got {got}")]
    BadLength { expected: usize, got: usize },

    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::DerivativeVanishes { .. }
                | Error::NonFinite { .. }
                | Error::CInconsistent { .. }
        )
    }
}
