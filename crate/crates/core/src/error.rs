// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: expected 2 or 3")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance {distance} exceeds the radio range {range}")]
    OutOfRange { distance: f64, range: f64 },

    #[error("need at least {required} anchors, got {got}")]
    TooFewAnchors { required: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not symmetric (largest asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("nodes {0} and {1} are not connected")]
    Unreachable(usize, usize),

    #[error("operation requires {expected} measurements")]
    ModeMismatch { expected: &'static str },

    #[error("singular anchor geometry (condition number {0:e})")]
    SingularGeometry(f64),

    #[error("configuration is rank deficient")]
    RankDeficient,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
