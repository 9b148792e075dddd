//! Exponential-weights (Gibbs) posterior, the classical KL-divergence
//! PAC-Bayes optimum for a uniform prior: `q_i ~ exp(-m * risk_i)`.

use crate::error::{Error, Result};
use crate::risk::{Method, Posterior, RiskProfile};

/// Full-support Gibbs posterior with temperature `m`. Exponents are shifted
/// by their maximum before exponentiation so large `m * risk` cannot
/// underflow the whole vector.
pub fn gibbs_kl_posterior(profile: &RiskProfile, m: u64) -> Result<Posterior> {
    if m < 1 {
        return Err(Error::SampleSizeTooSmall { min: 1, got: m });
    }
    let exponents: Vec<f64> = profile.risks().iter().map(|&r| -(m as f64) * r).collect();
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnormalized: Vec<f64> = exponents.iter().map(|&e| (e - max).exp()).collect();
    let z: f64 = unnormalized.iter().sum();
    let weights: Vec<f64> = unnormalized.iter().map(|&w| w / z).collect();
    Posterior::new(weights, profile.h(), Method::GibbsKl)
}
