use thiserror::Error;

/// Errors raised by the solver, the finite-element front-end and the
/// experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("symmetric eigensolver did not converge")]
    NoConvergence,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative time {0} supplied to a forward flow")]
    NegativeTime(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("rank {rank} exceeded cap {cap} at step {step}")]
    RankExplosion { step: usize, rank: usize, cap: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid mode count {modes} for a grid with {nodes} nodes")]
    InvalidModeCount { modes: usize, nodes: usize },

    #[error("grid with {fine} nodes is not nested over grid with {coarse} nodes")]
    NonNestedGrids { fine: usize, coarse: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("reference integrator unstable at step {step} (norm {norm:e})")]
    Instability { step: usize, norm: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::NoConvergence
                | Error::RankExplosion { .. }
                | Error::Instability { .. }
                | Error::NonFinite
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
