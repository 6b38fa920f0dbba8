//! Stopping-time structures: principal cubes, the corona decomposition by
//! the density `σ1(Q)σ2(Q)/|Q|^2`, and Whitney cubes of an open set.

mod corona;
mod principal;
mod whitney;

pub use corona::{build_corona, CoronaDecomposition};
pub use principal::{build_principal_cubes, PrincipalCubes};
pub use whitney::{whitney, whitney_to_depth, WhitneyCube, WhitneyDecomposition, DEFAULT_EXTRA_LEVELS, WHITNEY_GAMMA};
