use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A distribution or configuration parameter is outside its domain.
    InvalidParameter {
        name: &'static str,
        value: f64,
    },
    /// Quadrature or a series did not reach the requested tolerance.
    NumericalFailure(&'static str),
    /// An iterative solver ran out of iterations.
    ConvergenceFailure(&'static str),
    SampleTooSmall {
        needed: usize,
        got: usize,
    },
    /// The sample has no spread where the estimator needs some
    /// (e.g. equal quartiles, all-zero moments).
    DegenerateSample(&'static str),
    /// The operation is undefined for these arguments.
    Domain(&'static str),
    /// Too many bootstrap replicates or CV folds failed.
    TooManyFailures {
        failed: usize,
        total: usize,
    },
    InvalidConfig(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            Error::NumericalFailure(what) => write!(f, "numerical failure: {what}"),
            Error::ConvergenceFailure(what) => write!(f, "no convergence: {what}"),
            Error::SampleTooSmall { needed, got } => {
                write!(f, "sample too small: need at least {needed}, got {got}")
            }
            Error::DegenerateSample(what) => write!(f, "degenerate sample: {what}"),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::TooManyFailures { failed, total } => {
                write!(f, "{failed} of {total} replicates failed")
            }
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    /// Whether the error comes from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_) | Error::ConvergenceFailure(_) | Error::TooManyFailures { .. }
        )
    }
}
