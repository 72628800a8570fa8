use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An argument lies outside the domain of the function (singular point,
    /// wrong ordering, non-positive time).
    #[error("domain error: {0}")]
    Domain(String),
    /// A simulated path produced a non-finite value.
    #[error("path diverged at step {step} (path seed {seed})")]
    Diverged { seed: u64, step: usize },
    /// Too many Monte Carlo paths diverged for the estimate to be trusted.
    #[error("{excluded} of {total} paths diverged, above the exclusion limit")]
    ExclusionThreshold { excluded: usize, total: usize },
    /// An estimator has no meaningful value for the input (e.g. constant path).
    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),
    /// A mollifier family could not be built with the requested parameters.
    #[error("construction error: {0}")]
    Construction(String),
}

impl Error {
    /// True for errors caused by a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::ExclusionThreshold { .. } | Error::UndefinedEstimate(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! param_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Parameter(::alloc::format!($($arg)*))
    };
}

macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(::alloc::format!($($arg)*))
    };
}

pub(crate) use domain_err;
pub(crate) use param_err;
