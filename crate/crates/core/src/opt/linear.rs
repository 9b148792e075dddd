//! Closed-form posteriors for the linear-distance bound.
//!
//! The bound is strictly convex on the simplex, so the stationary point of
//! the partial KKT system is the global minimum whenever it is feasible.
//! Weights deviate from the prior proportionally to how far each risk sits
//! below the prior-averaged risk.

use crate::bound::bound_lin;
use crate::error::{Error, Result};
use crate::opt::SubsetSolution;
use crate::risk::{BoundConfig, Method, Posterior, RiskProfile};

/// Full-support stationary point for an arbitrary strictly positive prior:
///
/// ```text
/// q_i = p_i * (1 + (mean_P - risk_i) / sqrt(1/(4 m delta) - var_P))
/// ```
///
/// Defined only when `1/(4 m delta)` exceeds the prior-variance of the
/// risks; feasible only when every weight is non-negative. An undefined or
/// infeasible result signals that subset supports must be searched instead.
pub fn opt_lin_general_prior(profile: &RiskProfile, cfg: &BoundConfig) -> Result<SubsetSolution> {
    let h = profile.h();
    if cfg.prior.len() != h {
        return Err(Error::LengthMismatch {
            left: cfg.prior.len(),
            right: h,
        });
    }
    let p = cfg.prior.weights();
    let risks = profile.risks();
    let mean: f64 = risks.iter().zip(p).map(|(&r, &pi)| r * pi).sum();
    let var: f64 = risks
        .iter()
        .zip(p)
        .map(|(&r, &pi)| pi * (mean - r) * (mean - r))
        .sum();
    let radicand = 1.0 / (4.0 * cfg.m as f64 * cfg.delta) - var;
    if radicand <= 0.0 {
        return Ok(SubsetSolution::undefined(h));
    }
    let scale = radicand.sqrt();
    let weights: Vec<f64> = risks
        .iter()
        .zip(p)
        .map(|(&r, &pi)| pi * (1.0 + (mean - r) / scale))
        .collect();
    if weights.iter().any(|&w| w < 0.0) {
        return Ok(SubsetSolution::infeasible(h));
    }
    // renormalize away accumulated rounding; the exact weights sum to one
    let sum: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|&w| w / sum).collect();
    let posterior = Posterior::new(weights, h, Method::LinClosedForm)?;
    let bound = bound_lin(&posterior, cfg, profile)?;
    Ok(SubsetSolution {
        h_prime: h,
        posterior: Some(posterior),
        bound: Some(bound),
        feasible: true,
        defined: true,
    })
}

/// Best posterior with support on the `h_prime` lowest risks under a
/// uniform prior:
///
/// ```text
/// q_i = (1/H') * (1 + (mean_{H'} - risk_i) / sqrt(H/(H' 4 m delta) - var_{H'}))
/// ```
///
/// The prefactor `1/H'` makes the support weights sum to one and
/// reproduces the closed-form optimal bound value
/// `mean_{H'} + sqrt(H/(H' 4 m delta) - var_{H'})`.
pub fn opt_lin_subset(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
) -> Result<SubsetSolution> {
    let h = profile.h();
    if !cfg.prior.is_uniform() {
        return Err(Error::NonUniformPrior);
    }
    if h_prime < 2 || h_prime > h {
        return Err(Error::SubsetSizeOutOfRange { h_prime, h });
    }
    let mean = profile.prefix_mean(h_prime);
    let var = profile.prefix_var(h_prime);
    let radicand = subset_radicand(h, h_prime, cfg, var);
    if radicand <= 0.0 {
        return Ok(SubsetSolution::undefined(h_prime));
    }
    let scale = radicand.sqrt();
    let inv_hp = 1.0 / h_prime as f64;
    let mut weights = vec![0.0; h];
    for (w, &risk) in weights.iter_mut().zip(profile.risks()).take(h_prime) {
        *w = inv_hp * (1.0 + (mean - risk) / scale);
    }
    if weights[..h_prime].iter().any(|&w| w <= 0.0) {
        return Ok(SubsetSolution::infeasible(h_prime));
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    let posterior = Posterior::new(weights, h_prime, Method::LinClosedForm)?;
    let bound = bound_lin(&posterior, cfg, profile)?;
    Ok(SubsetSolution {
        h_prime,
        posterior: Some(posterior),
        bound: Some(bound),
        feasible: true,
        defined: true,
    })
}

/// Closed-form optimal bound value for the size-`h_prime` ordered subset:
/// `mean_{H'} + sqrt(H/(H' 4 m delta) - var_{H'})`. `None` when undefined.
pub fn lin_subset_bound_closed_form(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
) -> Option<f64> {
    if h_prime < 2 || h_prime > profile.h() {
        return None;
    }
    let var = profile.prefix_var(h_prime);
    let radicand = subset_radicand(profile.h(), h_prime, cfg, var);
    if radicand <= 0.0 {
        return None;
    }
    Some(profile.prefix_mean(h_prime) + radicand.sqrt())
}

fn subset_radicand(h: usize, h_prime: usize, cfg: &BoundConfig, var: f64) -> f64 {
    h as f64 / (h_prime as f64 * 4.0 * cfg.m as f64 * cfg.delta) - var
}

/// Warm-start support size for the linear search: the smallest `H'` whose
/// leading sum of squared risks reaches `H/(4 m delta)` (where the
/// increasing and decreasing components of the closed-form bound cross),
/// clamped to `[2, H]`. Returns `H` when the sum never crosses.
pub fn warm_start_h(profile: &RiskProfile, cfg: &BoundConfig) -> usize {
    let h = profile.h();
    let threshold = h as f64 / (4.0 * cfg.m as f64 * cfg.delta);
    let mut acc = 0.0;
    let mut crossing = h;
    for (i, &r) in profile.risks().iter().enumerate() {
        acc += r * r;
        if acc >= threshold {
            crossing = i + 1;
            break;
        }
    }
    crossing.clamp(2.min(h), h)
}
