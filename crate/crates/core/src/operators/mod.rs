//! Maximal functions, the sparse operator, level sets of the sparse
//! operator, and the exterior rough bilinear operator.

mod level_sets;
pub(crate) mod maximal;
mod rough;
pub(crate) mod sparse_op;

pub use level_sets::{level_set_decomposition, LevelSet, LevelSetDecomposition};
pub(crate) use maximal::maximal_on_leaves;
pub use maximal::{dyadic_maximal, multi_grid_maximal};
pub use rough::{r1_lower_functional, riesz_like_apply, QuadratureMesh, R1Functional};
pub use sparse_op::{cube_sum_operator, sparse_operator};
