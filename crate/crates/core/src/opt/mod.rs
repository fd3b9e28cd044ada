//! Offline solvers: the exact interval DP, an exhaustive oracle, the linear
//! 2-approximation and closed-form constructions for uniform instances.

mod approx;
mod brute;
mod dp;
mod uniform;

pub use approx::approx2_linear;
pub use brute::{brute_force_opt, BRUTE_FORCE_DEFAULT_MAX_N};
pub use dp::{dp_opt, dp_opt_prefix_costs, GENERAL_DP_MAX_N};
pub use uniform::{
    c_k, solve_beta, uniform_opt_cappedk, uniform_opt_linear, UniformParams, UniformSolution,
    UNIFORM_LINEAR_EXACT_MAX_N,
};

use crate::model::Schedule;

/// Where a node still to be built hangs: its parent key and whether it is the
/// left child. `None` for the root.
type ParentLink = Option<(usize, bool)>;

/// An optimal (or claimed optimal) cost with a schedule achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct OptSolution {
    pub cost: f64,
    pub schedule: Schedule,
}
