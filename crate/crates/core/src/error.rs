use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numeric failure in {context}: achieved error estimate {achieved:e}")]
    NumericFailure { context: String, achieved: f64 },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("no transparency dip found in spectrum")]
    NoResonance,

    #[error("Lorentzian fit failed ({reason}); bisection FWHM = {fwhm_bisect:e} rad/s")]
    FitFailure { reason: String, fwhm_bisect: f64 },

    #[error("velocity grid mismatch: {0}")]
    GridMismatch(String),

    #[error("at delta_r = {delta_r:e} rad/s: {source}")]
    AtDetuning {
        delta_r: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_detuning(self, delta_r: f64) -> Self {
        Error::AtDetuning {
            delta_r,
            source: Box::new(self),
        }
    }

    /// Strips detuning annotations and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtDetuning { source, .. } => source.root(),
            other => other,
        }
    }
}
