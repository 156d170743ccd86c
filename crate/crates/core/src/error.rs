use alloc::string::String;
use core::fmt;

/// Errors raised by the analysis, simulation and planning kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented domain.
    InvalidParameter { name: &'static str, reason: String },
    /// Adaptive quadrature stopped before meeting its tolerance.
    Quadrature(QuadratureFailure),
    /// A spectrum plan constraint cannot be satisfied.
    Infeasible(String),
}

/// Diagnostic attached to a quadrature that did not converge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureFailure {
    pub estimate: f64,
    pub error_estimate: f64,
    pub tolerance: f64,
    pub subdivisions: usize,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::Quadrature(q) => write!(
                f,
                "quadrature did not converge after {} subdivisions (estimate {:e}, error {:e} > tolerance {:e})",
                q.subdivisions, q.estimate, q.error_estimate, q.tolerance
            ),
            Error::Infeasible(why) => write!(f, "infeasible plan: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Returns an `InvalidParameter` error unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $name:expr, $($reason:tt)+) => {
        if !($cond) {
            return Err($crate::Error::invalid($name, alloc::format!($($reason)+)));
        }
    };
}
pub(crate) use ensure;
