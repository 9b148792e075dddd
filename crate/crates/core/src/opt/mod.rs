//! Posterior optimizers for the chi-squared PAC-Bayes bounds.
//!
//! Under a uniform prior the search for the bound-minimizing posterior
//! collapses from the full simplex to a linear sweep over ordered-subset
//! supports: for every support size `H'` the best support is the `H'`
//! classifiers with smallest empirical risk, so it suffices to solve one
//! subproblem per `H'` and take the argmin ([`search::ordered_subset_search`]).
//!
//! Per-subset solvers: a closed form for the linear distance
//! ([`linear::opt_lin_subset`]), fixed-point iterations for the squared and
//! kl distances ([`fixed_point::fp_sq_subset`], [`fixed_point::fp_kl_subset`]).
//! [`gibbs::gibbs_kl_posterior`] is the classical exponential-weights
//! baseline and [`oracle::brute_force_oracle`] an exhaustive simplex-grid
//! check for small `H`.

pub mod convexity;
pub mod fixed_point;
pub mod gibbs;
pub mod linear;
pub mod oracle;
pub mod search;

pub use convexity::{
    check_sq_nonconvexity_witness, check_sq_quasiconvexity_condition, sq_first_order_convexity,
    ConvexityCheck,
};
pub use fixed_point::{fp_kl_subset, fp_kl_subset_variant, fp_sq_subset};
pub use gibbs::gibbs_kl_posterior;
pub use linear::{
    lin_subset_bound_closed_form, opt_lin_general_prior, opt_lin_subset, warm_start_h,
};
pub use oracle::brute_force_oracle;
pub use search::{ordered_subset_search, ordered_subset_search_warm, subset_solution_at};

use crate::bound::BoundValue;
use crate::risk::Posterior;

/// Outcome of solving for the best posterior on one ordered subset.
#[derive(Debug, Clone)]
pub struct SubsetSolution {
    /// Candidate support size `H'`.
    pub h_prime: usize,
    /// The posterior, absent when the solution is undefined or carries a
    /// negative weight.
    pub posterior: Option<Posterior>,
    /// Bound at the posterior, when one exists.
    pub bound: Option<BoundValue>,
    /// All support weights strictly positive and summing to one.
    pub feasible: bool,
    /// False when the closed form is undefined (non-positive radicand).
    pub defined: bool,
}

impl SubsetSolution {
    pub(crate) fn undefined(h_prime: usize) -> SubsetSolution {
        SubsetSolution {
            h_prime,
            posterior: None,
            bound: None,
            feasible: false,
            defined: false,
        }
    }

    pub(crate) fn infeasible(h_prime: usize) -> SubsetSolution {
        SubsetSolution {
            h_prime,
            posterior: None,
            bound: None,
            feasible: false,
            defined: true,
        }
    }

    /// Bound value, for feasible solutions.
    pub fn bound_val(&self) -> Option<f64> {
        self.bound.as_ref().map(|b| b.value)
    }
}

/// State of a fixed-point iteration at exit.
#[derive(Debug, Clone)]
pub struct FpState {
    /// Terminal iterate on the support (length `H'`).
    pub iterate: Vec<f64>,
    /// Iterations performed.
    pub iteration: usize,
    /// Terminal sup-norm change.
    pub residual: f64,
    pub converged: bool,
}
