use thiserror::Error;

/// Failures surfaced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must be at least 4x4 cells, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("boundary data violates the zero net-flux condition: flux = {flux:e}")]
    Incompatible { flux: f64 },
    #[error("field is not discretely solenoidal: divergence norm = {norm:e}")]
    NotSolenoidal { norm: f64 },
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("time step violates the CFL bound (cfl = {cfl:.3}); use dt <= {suggested:e}")]
    Cfl { cfl: f64, suggested: f64 },
    #[error("dense assembly refused: {0}")]
    TooLarge(String),
    #[error("operator is not sectorial: {0}")]
    NotAnalytic(String),
    #[error("method error: {0}")]
    Method(String),
    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable numeric code used across the C boundary.
    pub fn code(&self) -> i32 {
        match self {
            Error::GridTooSmall { .. } => 2,
            Error::InvalidParameter(_) => 3,
            Error::ShapeMismatch(_) => 4,
            Error::Incompatible { .. } => 5,
            Error::NotSolenoidal { .. } => 6,
            Error::Singular(_) => 7,
            Error::Cfl { .. } => 8,
            Error::TooLarge(_) => 9,
            Error::NotAnalytic(_) => 10,
            Error::Method(_) => 11,
            Error::Config { .. } => 12,
            Error::Checkpoint(_) => 13,
            Error::Io(_) => 14,
            Error::Inconsistent(_) => 15,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
