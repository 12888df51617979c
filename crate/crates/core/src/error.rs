use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range configuration (distribution parameters, constants, experiment setup).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid argument to an operation (shapes, indices, empty inputs).
    #[error("argument error: {0}")]
    Argument(String),

    /// A mathematical precondition of the construction does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A formula is undefined for the given inputs (e.g. a zero denominator).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A desk-scale guard was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Interval detection found no qualifying dyadic level.
    #[error("detection failed: {message}")]
    Detection { message: String, left_masses: Vec<f64>, right_masses: Vec<f64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
