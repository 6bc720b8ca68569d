use std::fmt;

/// Crate-wide error type. Variants carry the values a caller needs to
/// diagnose the failure without re-running the computation.
#[derive(Debug)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    InvalidInput(String),
    /// Vector or matrix dimensions do not line up with the asset count.
    DimensionMismatch { expected: usize, got: usize },
    /// An operation that requires zero terminal inventory was handed a
    /// strategy that does not return to flat; `residual` is |q_T| per asset.
    NotRoundTrip { residual: Vec<f64>, tol: f64 },
    /// Adaptive quadrature ran out of refinement depth before reaching the
    /// requested relative tolerance.
    QuadratureNonConvergence { requested: f64, achieved: f64 },
    /// A numerical routine produced an inconsistent or non-finite result.
    NumericalFailure(String),
    /// Malformed CSV or text input.
    Parse(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotRoundTrip { residual, tol } => write!(
                f,
                "not a round trip: terminal inventory {residual:?} exceeds tolerance {tol:e}"
            ),
            Error::QuadratureNonConvergence { requested, achieved } => write!(
                f,
                "quadrature did not converge: requested relative tolerance {requested:e}, achieved {achieved:e}"
            ),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
