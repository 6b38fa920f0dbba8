use thiserror::Error;

use crate::dyadic::Cube;

/// Errors raised by model construction and by the constructions built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkbenchError {
    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("level {level} outside [0, {max}]")]
    LevelRange { level: u32, max: u32 },

    #[error("cube {0} is already at maximal depth")]
    MaxDepth(Cube),

    #[error("operands belong to different models: {0}")]
    ConfigMismatch(String),

    #[error("cell function value {value} at cell {cell} is negative or not finite")]
    InvalidValue { cell: usize, value: f64 },

    #[error("weight must be strictly positive, found {value} at cell {cell}")]
    NonPositive { cell: usize, value: f64 },

    #[error("invalid exponent system: {0}")]
    Exponent(String),

    #[error("power exponent {0} is not locally integrable at the origin")]
    NotIntegrable(f64),

    #[error("index {index} out of range for {len} slots")]
    IndexRange { index: usize, len: usize },

    #[error("generated family is not sparse: {0}")]
    NotSparse(String),

    #[error("degenerate measure on cube {0}")]
    DegenerateMeasure(Cube),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;
