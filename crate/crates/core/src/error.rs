use thiserror::Error;

/// Errors raised by the model, quadrature and oracle layers.
///
/// Values are carried as `f64` regardless of the scalar type used for the
/// computation so that the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("level shift is singular at omega = {omega} ({which})")]
    Singular { omega: f64, which: &'static str },

    #[error("renormalization did not converge; last iterates {previous} and {last}")]
    NoConvergence { previous: f64, last: f64 },

    #[error("pole search is ambiguous: {} sign changes in {brackets:?}", brackets.len())]
    AmbiguousPole { brackets: Vec<(f64, f64)> },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error bound {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("operation unsupported in the incoherent regime")]
    IncoherentRegime,

    #[error("Bloch vector norm {norm} exceeds 1 beyond the clamp window")]
    InvalidState { norm: f64 },

    #[error("time grid must be non-negative and strictly increasing (index {index})")]
    TimeGrid { index: usize },

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("trace drift {drift} exceeds 1e-8 at step {step}; reduce dt")]
    TraceDrift { drift: f64, step: usize },

    #[error("hermiticity violated by {defect} at step {step}")]
    Hermiticity { defect: f64, step: usize },

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("norm drift {drift} during propagation")]
    NormDrift { drift: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_time(self, t: f64) -> Self {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }
}
