use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the symbol algebra, the factorization engine and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("grid size {0} is not a power of two")]
    GridSize(usize),

    #[error("series support of width {width} does not fit a grid of {n} points")]
    GridTooSmall { width: usize, n: usize },

    #[error("determinant vanishes on the unit circle at {points:?}")]
    CircleSingularity { points: Vec<Complex64> },

    #[error("symbol is degenerate: {0}")]
    Degenerate(String),

    #[error("winding number mismatch: root count gives {roots}, phase unwrapping gives {phase}")]
    WindingMismatch { roots: i64, phase: i64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("series does not converge: {0}")]
    Convergence(String),

    #[error("not a causal stable transfer function: {0}")]
    NotCausal(String),

    #[error("operator is not invertible: {0}")]
    NotInvertible(String),

    #[error("model has no solution for this parameter value (partial indices {kappa:?})")]
    NoSolution { kappa: Vec<i64> },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid regularizer: {0}")]
    Regularizer(String),

    #[error("parameter on a non-invertible boundary: {0}")]
    Boundary(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<lrem_linalg::NoConvergence> for Error {
    fn from(e: lrem_linalg::NoConvergence) -> Self {
        Error::Convergence(e.to_string())
    }
}
