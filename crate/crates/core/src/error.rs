use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// The heralded branch has (numerically) zero norm.
    #[error("heralded branch annihilated (norm squared {norm_squared:e})")]
    ZeroState { norm_squared: f64 },

    /// The Fock cutoff leaves too much probability mass in the top band.
    #[error(
        "truncation unsafe: tail mass {tail:e} exceeds tolerance {tolerance:e} at k_max = {k_max}"
    )]
    TruncationUnsafe {
        tail: f64,
        tolerance: f64,
        k_max: usize,
    },

    #[error("decomposition failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no grid point satisfies success probability >= {p_min}")]
    NoFeasiblePoint { p_min: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("malformed table: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
