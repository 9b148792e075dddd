//! Optimal chi-squared-divergence PAC-Bayes posteriors over a finite
//! classifier set, and the experiment pipeline that feeds them.
//!
//! The crate is organized around a risk profile: the empirical risks of `H`
//! base classifiers sorted non-decreasingly. Given a profile, a prior and a
//! confidence level, the `opt` module finds the posterior minimizing the
//! chosen PAC-Bayes bound (linear, squared or binary-KL distance) by a
//! linear search over ordered-subset supports, using a closed form for the
//! linear distance and fixed-point iterations for the other two. The `ccp`
//! module solves the kl case as a difference-of-convex program for
//! comparison, `svm` builds risk profiles from a regularization-parameter
//! grid of kernelized SVMs, and `experiment` assembles bound /
//! test-error / sparsity reports plus a cross-validation baseline.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN along with the
// out-of-range sign, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod ccp;
pub mod error;
pub mod experiment;
pub mod moments;
pub mod opt;
pub mod risk;
pub mod svm;

pub use error::{Error, Result};
pub use risk::{
    chi2_divergence, make_risk_profile, BoundConfig, Distance, Method, Posterior, Prior,
    RiskProfile,
};
