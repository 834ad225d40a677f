use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice domain: {0}")]
    InvalidDomain(String),

    #[error("invalid interaction stencil: {0}")]
    InvalidStencil(String),

    #[error("deformation is not a homogeneous strain plus a periodic displacement: {0}")]
    NotPeriodic(String),

    #[error("invalid region decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("strain outside the declared potential range: {0}")]
    OutOfRange(String),

    #[error(
        "stress field is not divergence-free (residual {residual:.3e}, tolerance {tolerance:.3e})"
    )]
    NotDivergenceFree { residual: f64, tolerance: f64 },

    #[error("coupling is not consistent: {0}")]
    Inconsistent(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
