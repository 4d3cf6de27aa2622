use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("boundary edge {edge} has no boundary condition tag")]
    UntaggedBoundary { edge: usize },

    #[error("unsupported polynomial order {0} (expected one of 2, 4, 6, 8)")]
    UnsupportedOrder(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate QSFEM stencil at eta = {eta}: {reason}")]
    DegenerateStencil { eta: f64, reason: &'static str },

    #[error("no propagating zero found: {0}")]
    NoPropagatingZero(String),

    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("symbol is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("operator is not translation invariant: anchors differ by {0:e}")]
    NotTranslationInvariant(f64),

    #[error("operator block at offset {0:?} is outside the declared window")]
    WindowTooSmall([i64; 2]),

    #[error("local interpolation system is singular")]
    SingularInterpolation,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
