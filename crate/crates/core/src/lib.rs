//! Finite dyadic workbench for multilinear sparse operators and multiple
//! Muckenhoupt weights.
//!
//! Everything lives on a periodic unit cube of dimension one or two, cut
//! into `3 * 2^L` cells per axis so that every cube of the `3^n`
//! third-shifted dyadic grids is an exact union of cells.

pub mod analysis;
pub mod constants;
pub mod decompositions;
pub mod dyadic;
pub mod error;
pub mod norms;
pub mod operators;
pub mod sparse;
pub mod weights;

pub use constants::{
    ainfty_constant, ainfty_constant_in, apq_per_cube, multilinear_ap_constant, transform_vector, ConstantReport,
};
pub use dyadic::{CellFunction, Cube, CubeFamily, GridId, ModelConfig, Pyramid};
pub use error::{Result, WorkbenchError};
pub use norms::{lp_norm, weak_lp_norm};
pub use sparse::{SparseFamily, SparseViolation};
pub use weights::{ExponentSystem, WeightVector};
