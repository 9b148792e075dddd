//! Bound evaluation for a posterior/prior pair: linear, squared and
//! binary-KL distances.
//!
//! The linear and squared bounds are explicit sums of the averaged
//! empirical risk and a complexity term. The kl bound has no explicit
//! form: the bound value is the right root `r` of
//! `kl(E_Q[risk], r) = budget` on `[E_Q[risk], 1)`, extracted by bisection
//! (binary kl is strictly increasing in its second argument on that
//! interval).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{i_r_kl, i_r_sq};
use crate::risk::{chi2_plus_one, BoundConfig, Distance, Posterior, RiskProfile};

/// Upper cap for the kl bound root; also the bisection bracket end.
const KL_ROOT_CAP: f64 = 1.0 - 1e-12;

/// Absolute bisection tolerance for the kl root.
const KL_ROOT_TOL: f64 = 1e-12;

/// An evaluated bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundValue {
    /// The bound on the averaged true risk. For lin/sq this is
    /// `empirical_term + complexity_term`; for kl it is the extracted root
    /// and lies in `[empirical_term, 1]`.
    pub value: f64,
    /// `E_Q[risk]`, the posterior-averaged empirical risk.
    pub empirical_term: f64,
    /// The additive complexity term for lin/sq; the kl budget
    /// (right-hand side of the divergence constraint) for kl.
    pub complexity_term: f64,
    pub distance: Distance,
}

/// Binary KL divergence `kl(p_hat, q)` between Bernoulli parameters, with
/// the `0 ln 0 = 0` convention.
pub fn kl_binary(p_hat: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::RiskOutOfRange(q));
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::RiskOutOfRange(p_hat));
    }
    Ok(kl_binary_unchecked(p_hat, q))
}

/// `kl_binary` without argument validation, for hot loops. Requires
/// `p_hat` in `[0,1]` and `q` in `(0,1)`.
#[inline]
pub(crate) fn kl_binary_unchecked(p_hat: f64, q: f64) -> f64 {
    let mut v = 0.0;
    if p_hat > 0.0 {
        v += p_hat * (p_hat / q).ln();
    }
    if p_hat < 1.0 {
        v += (1.0 - p_hat) * ((1.0 - p_hat) / (1.0 - q)).ln();
    }
    v
}

/// Right root of `kl(p_hat, r) = eps_bound` on `r >= p_hat`, capped at
/// `1 - 1e-12`. A zero budget returns `p_hat` itself.
pub fn kl_upper_inverse(p_hat: f64, eps_bound: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_hat));
    debug_assert!(eps_bound >= 0.0);
    if eps_bound <= 0.0 {
        return p_hat;
    }
    if p_hat >= KL_ROOT_CAP {
        return KL_ROOT_CAP;
    }
    if kl_binary_unchecked(p_hat, KL_ROOT_CAP) <= eps_bound {
        return KL_ROOT_CAP;
    }
    let mut lo = p_hat;
    let mut hi = KL_ROOT_CAP;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = kl_binary_unchecked(p_hat, mid);
        if v > eps_bound {
            hi = mid;
        } else {
            lo = mid;
        }
        // the divergence steepens near r = 1, so polish past the width
        // tolerance until the residual is small too
        if hi - lo <= KL_ROOT_TOL && (v - eps_bound).abs() <= 1e-10 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn check_alignment(q: &Posterior, cfg: &BoundConfig, profile: &RiskProfile) -> Result<()> {
    if q.len() != profile.h() {
        return Err(Error::LengthMismatch {
            left: q.len(),
            right: profile.h(),
        });
    }
    if cfg.prior.len() != profile.h() {
        return Err(Error::LengthMismatch {
            left: cfg.prior.len(),
            right: profile.h(),
        });
    }
    Ok(())
}

/// Linear-distance bound: `E_Q[risk] + sqrt((chi2 + 1) / (4 m delta))`.
pub fn bound_lin(q: &Posterior, cfg: &BoundConfig, profile: &RiskProfile) -> Result<BoundValue> {
    check_alignment(q, cfg, profile)?;
    let empirical = q.expectation(profile.risks())?;
    let chi1 = chi2_plus_one(q.weights(), &cfg.prior);
    let complexity = (chi1 / (4.0 * cfg.m as f64 * cfg.delta)).sqrt();
    Ok(BoundValue {
        value: empirical + complexity,
        empirical_term: empirical,
        complexity_term: complexity,
        distance: Distance::Lin,
    })
}

/// Squared-distance bound:
/// `E_Q[risk] + ((chi2 + 1) * (12m - 11) / (16 m^3 delta))^(1/4)`.
pub fn bound_sq(q: &Posterior, cfg: &BoundConfig, profile: &RiskProfile) -> Result<BoundValue> {
    check_alignment(q, cfg, profile)?;
    let empirical = q.expectation(profile.risks())?;
    let chi1 = chi2_plus_one(q.weights(), &cfg.prior);
    let complexity = (chi1 * i_r_sq(cfg.m)?.value / cfg.delta).powf(0.25);
    Ok(BoundValue {
        value: empirical + complexity,
        empirical_term: empirical,
        complexity_term: complexity,
        distance: Distance::Sq,
    })
}

/// kl-distance bound: the right root of
/// `kl(E_Q[risk], r) = sqrt((chi2 + 1) * I_kl(m) / delta)`.
///
/// Averaged empirical risks of exactly 0 or 1 use the analytic limits
/// (`kl(0, r) = ln(1/(1-r))` inverts to `1 - exp(-budget)`; an averaged
/// risk of 1 gives the vacuous bound 1).
pub fn bound_kl(q: &Posterior, cfg: &BoundConfig, profile: &RiskProfile) -> Result<BoundValue> {
    check_alignment(q, cfg, profile)?;
    let empirical = q.expectation(profile.risks())?;
    let chi1 = chi2_plus_one(q.weights(), &cfg.prior);
    let budget = (chi1 * i_r_kl(cfg.m)?.value / cfg.delta).sqrt();
    let value = if empirical <= 0.0 {
        -(-budget).exp_m1()
    } else if empirical >= 1.0 {
        1.0
    } else {
        kl_upper_inverse(empirical, budget)
    };
    Ok(BoundValue {
        value,
        empirical_term: empirical,
        complexity_term: budget,
        distance: Distance::Kl,
    })
}

/// Evaluates the bound selected by `cfg.distance`.
pub fn bound_value(q: &Posterior, cfg: &BoundConfig, profile: &RiskProfile) -> Result<BoundValue> {
    match cfg.distance {
        Distance::Lin => bound_lin(q, cfg, profile),
        Distance::Sq => bound_sq(q, cfg, profile),
        Distance::Kl => bound_kl(q, cfg, profile),
    }
}
