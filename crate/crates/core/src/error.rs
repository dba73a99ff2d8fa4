use alloc::string::String;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration (grid, step size, sample size) is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A coefficient formula hit a vanishing denominator.
    #[error("singular parameters: {0}")]
    Singular(String),
    /// Numerical Laplace inversion did not reach the requested tolerance.
    #[error("inversion did not reach tolerance {tolerance:e}: value {value}, error estimate {estimate:e}")]
    Accuracy {
        value: f64,
        estimate: f64,
        tolerance: f64,
    },
    /// An iterative solver stopped without converging.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    /// A drift field exceeds the bound it is checked against.
    #[error("drift `{label}` exceeds bound {kappa} (|b| = {observed})")]
    DriftBound {
        label: String,
        kappa: f64,
        observed: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !($cond) {
            return Err($crate::Error::$variant(alloc::format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
