use thiserror::Error;

/// Errors raised by the statistics, estimators, generators and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero vector has no spatial sign ({context})")]
    ZeroVector { context: String },

    #[error("{what} requires at least {needed} observations, got {got}")]
    TooFewObservations {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("dimension mismatch: {left} vs {right} columns")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate variance estimate ({0}); the data carry no spread to standardize by")]
    DegenerateVariance(&'static str),

    #[error("matrix entry at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("malformed matrix: {0}")]
    Shape(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("auxiliary scales do not match the samples: {0}")]
    MismatchedAuxiliary(String),

    #[error("scale law produced a non-positive scale {0}")]
    NonpositiveScale(f64),

    #[error("subsample of size {size} is too small (need at least {needed})")]
    SubsampleTooSmall { size: usize, needed: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("replicate {replicate} at grid point {grid_index}: {source}")]
    Replicate {
        grid_index: usize,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(what: &'static str, needed: usize, got: usize) -> Result<()> {
    if got < needed {
        Err(Error::TooFewObservations { what, needed, got })
    } else {
        Ok(())
    }
}
