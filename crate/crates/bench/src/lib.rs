//! Fixed inputs shared by the benchmarks.

use workbench_core::{CellFunction, ModelConfig, Result};

/// A positive, mildly oscillating function, the same for every call.
pub fn wave(cfg: ModelConfig, phase: usize) -> Result<CellFunction> {
    CellFunction::from_fn(cfg, |[a, b]| 1.0 + ((a * 7 + b * 13 + phase) % 17) as f64 / 4.0)
}
