//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input too small or collapsed to carry out the operation.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Two instance markers claim the same pixels.
    #[error("marker collision: annotation points {a} and {b} are closer than 2 px")]
    MarkerCollision { a: usize, b: usize },

    /// Value outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Raster or grid shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed textual or binary input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
