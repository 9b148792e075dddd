//! Fixed-point iterations for the squared and kl-distance bounds on an
//! ordered subset support, under a uniform prior.
//!
//! Both maps come from the partial KKT system with strict positivity: the
//! stationarity condition is rearranged into `q = T(q)` and iterated from a
//! given start. Plain Picard iteration converges quickly in practice; a 0.5
//! damping factor kicks in as a safety net after a long non-monotone
//! stretch. Negative intermediate weights are clamped to the configured
//! interior floor and the iterate renormalized; a support size whose
//! converged point sits on the floor is reported infeasible.

use crate::bound::{bound_kl, bound_sq, kl_upper_inverse};
use crate::error::{Error, Result};
use crate::moments::{i_r_kl, i_r_sq};
use crate::opt::{FpState, SubsetSolution};
use crate::risk::{BoundConfig, Method, Posterior, RiskProfile};

const MAX_ITER: usize = 10_000;
const SQ_TOL: f64 = 1e-12;
const KL_TOL: f64 = 1e-10;
const DAMPING_AFTER: usize = 500;

struct IterationControl {
    tol: f64,
    non_monotone: usize,
    last_residual: f64,
    damping: bool,
}

impl IterationControl {
    fn new(tol: f64) -> Self {
        IterationControl {
            tol,
            non_monotone: 0,
            last_residual: f64::INFINITY,
            damping: false,
        }
    }

    /// Records a step residual; returns true once converged.
    fn step(&mut self, residual: f64) -> bool {
        if residual >= self.last_residual {
            self.non_monotone += 1;
            if self.non_monotone >= DAMPING_AFTER {
                self.damping = true;
            }
        }
        self.last_residual = residual;
        residual < self.tol
    }
}

fn validate_subset_args(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
    init: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if !cfg.prior.is_uniform() {
        return Err(Error::NonUniformPrior);
    }
    if h_prime < 2 || h_prime > profile.h() {
        return Err(Error::SubsetSizeOutOfRange {
            h_prime,
            h: profile.h(),
        });
    }
    match init {
        None => Ok(vec![1.0 / h_prime as f64; h_prime]),
        Some(w) => {
            if w.len() != h_prime {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: h_prime,
                });
            }
            let sum: f64 = w.iter().sum();
            if !(sum > 0.0) || w.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::NotAProbability("fixed-point start".into()));
            }
            Ok(w.iter().map(|&x| x / sum).collect())
        }
    }
}

/// Clamps to the interior floor and renormalizes in place.
fn clamp_and_normalize(w: &mut [f64], floor: f64) {
    for x in w.iter_mut() {
        if *x < floor {
            *x = floor;
        }
    }
    let sum: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= sum;
    }
}

fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Embeds support weights into the full-length posterior and evaluates the
/// bound, marking feasibility by strict clearance of the interior floor.
#[allow(clippy::too_many_arguments)]
fn finish_subset(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
    support: Vec<f64>,
    iteration: usize,
    residual: f64,
    converged: bool,
    method: Method,
) -> Result<(SubsetSolution, FpState)> {
    let floor = cfg.epsilon_interior;
    let feasible = converged && support.iter().all(|&w| w > floor);
    let mut weights = vec![0.0; profile.h()];
    weights[..h_prime].copy_from_slice(&support);
    let posterior = Posterior::new(weights, h_prime, method)?;
    let bound = match method {
        Method::SqFp => bound_sq(&posterior, cfg, profile)?,
        _ => bound_kl(&posterior, cfg, profile)?,
    };
    let state = FpState {
        iterate: support,
        iteration,
        residual,
        converged,
    };
    let sol = SubsetSolution {
        h_prime,
        posterior: Some(posterior),
        bound: Some(bound),
        feasible,
        defined: true,
    };
    Ok((sol, state))
}

/// Squared-distance fixed point on the `h_prime` lowest risks:
///
/// ```text
/// q_i = 1/H' + 2 (sum q^2)^(3/4) / ((12m-11) H / (16 m^3 delta))^(1/4)
///             * (mean_{H'} - risk_i)
/// ```
pub fn fp_sq_subset(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
    init: Option<&[f64]>,
) -> Result<(SubsetSolution, FpState)> {
    let mut q = validate_subset_args(profile, cfg, h_prime, init)?;
    let h = profile.h() as f64;
    let mean = profile.prefix_mean(h_prime);
    let denom = (i_r_sq(cfg.m)?.value * h / cfg.delta).powf(0.25);
    let inv_hp = 1.0 / h_prime as f64;
    let floor = cfg.epsilon_interior;

    let mut ctrl = IterationControl::new(SQ_TOL);
    let mut next = vec![0.0; h_prime];
    for iter in 1..=MAX_ITER {
        let s: f64 = q.iter().map(|&x| x * x).sum();
        let factor = 2.0 * s.powf(0.75) / denom;
        for (x, &risk) in next.iter_mut().zip(profile.risks()) {
            *x = inv_hp + factor * (mean - risk);
        }
        clamp_and_normalize(&mut next, floor);
        if ctrl.damping {
            for (x, &prev) in next.iter_mut().zip(q.iter()) {
                *x = 0.5 * *x + 0.5 * prev;
            }
        }
        let residual = sup_norm_diff(&next, &q);
        q.copy_from_slice(&next);
        if ctrl.step(residual) {
            return finish_subset(profile, cfg, h_prime, q, iter, residual, true, Method::SqFp);
        }
    }
    let residual = ctrl.last_residual;
    finish_subset(
        profile,
        cfg,
        h_prime,
        q,
        MAX_ITER,
        residual,
        false,
        Method::SqFp,
    )
}

/// kl-distance fixed point on the `h_prime` lowest risks. Each sweep
/// extracts the current bound root `r` and reweights by
///
/// ```text
/// q_i ~ (sum q^2) * (1 + (risk_i - L) / sqrt(H (sum q^2) I_kl(m) / delta)
///                        * ln(L (1-r) / (r (1-L))))
/// ```
///
/// with `L = sum risk_i q_i`, renormalized each sweep. The log factor is
/// negative (`r > L`), so weights decrease with risk. Profiles whose
/// support risks are all equal short-circuit to the uniform posterior.
pub fn fp_kl_subset(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
    init: Option<&[f64]>,
) -> Result<(SubsetSolution, FpState)> {
    fp_kl_subset_variant(profile, cfg, h_prime, init, false)
}

/// [`fp_kl_subset`] with a diagnostic sign flip of the deviation factor
/// (`L - risk_i` instead of `risk_i - L`), which orders weights the wrong
/// way around. Exposed for comparison only.
pub fn fp_kl_subset_variant(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
    init: Option<&[f64]>,
    flip_deviation: bool,
) -> Result<(SubsetSolution, FpState)> {
    let mut q = validate_subset_args(profile, cfg, h_prime, init)?;
    let h = profile.h() as f64;
    let risks = &profile.risks()[..h_prime];
    let dev_sign = if flip_deviation { -1.0 } else { 1.0 };
    let floor = cfg.epsilon_interior;

    // Equal risks over the support: the optimal posterior is the prior
    // restricted to the support, i.e. uniform. This also covers the
    // all-zero and all-one boundary cases the general sweep cannot touch.
    if risks[h_prime - 1] - risks[0] == 0.0 {
        let uniform = vec![1.0 / h_prime as f64; h_prime];
        return finish_subset(profile, cfg, h_prime, uniform, 1, 0.0, true, Method::KlFp);
    }

    let moment = i_r_kl(cfg.m)?.value;
    let mut ctrl = IterationControl::new(KL_TOL);
    let mut next = vec![0.0; h_prime];
    for iter in 1..=MAX_ITER {
        let s: f64 = q.iter().map(|&x| x * x).sum();
        let l_avg: f64 = risks.iter().zip(&q).map(|(&r, &w)| r * w).sum();
        if l_avg <= 0.0 || l_avg >= 1.0 {
            // only reachable from a degenerate start on boundary risks
            let uniform = vec![1.0 / h_prime as f64; h_prime];
            return finish_subset(
                profile,
                cfg,
                h_prime,
                uniform,
                iter,
                0.0,
                true,
                Method::KlFp,
            );
        }
        let budget = (h * s * moment / cfg.delta).sqrt();
        let r = kl_upper_inverse(l_avg, budget);
        let log_factor = (l_avg * (1.0 - r) / (r * (1.0 - l_avg))).ln();
        for (x, &risk) in next.iter_mut().zip(risks) {
            let dev = dev_sign * (risk - l_avg);
            *x = s * (1.0 + dev * log_factor / budget);
        }
        clamp_and_normalize(&mut next, floor);
        if ctrl.damping {
            for (x, &prev) in next.iter_mut().zip(q.iter()) {
                *x = 0.5 * *x + 0.5 * prev;
            }
        }
        let residual = sup_norm_diff(&next, &q);
        q.copy_from_slice(&next);
        if ctrl.step(residual) {
            return finish_subset(profile, cfg, h_prime, q, iter, residual, true, Method::KlFp);
        }
    }
    let residual = ctrl.last_residual;
    finish_subset(
        profile,
        cfg,
        h_prime,
        q,
        MAX_ITER,
        residual,
        false,
        Method::KlFp,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{Distance, Prior};

    fn cfg(d: Distance, h: usize, m: u64, delta: f64) -> BoundConfig {
        BoundConfig::new(d, m, delta, Prior::uniform(h)).unwrap()
    }

    #[test]
    fn sq_equal_risks_stay_uniform() {
        let profile = RiskProfile::unlabeled(&[0.25; 5], 80).unwrap();
        let c = cfg(Distance::Sq, 5, 80, 0.05);
        let (sol, state) = fp_sq_subset(&profile, &c, 5, None).unwrap();
        assert!(state.converged && sol.feasible);
        for &w in &state.iterate {
            assert!((w - 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn sq_worked_profile_converges_and_orders_weights() {
        let profile = RiskProfile::unlabeled(&[0.1, 0.2, 0.3, 0.4], 100).unwrap();
        let c = cfg(Distance::Sq, 4, 100, 0.05);
        let (sol, state) = fp_sq_subset(&profile, &c, 4, None).unwrap();
        assert!(state.converged);
        let q = sol.posterior.as_ref().unwrap();
        for w in q.weights().windows(2) {
            assert!(
                w[0] >= w[1] - 1e-12,
                "weights not non-increasing: {:?}",
                q.weights()
            );
        }
        // fixed point improves on the uniform posterior
        let uniform = Posterior::uniform(4, Method::SqFp);
        let b_uniform = bound_sq(&uniform, &c, &profile).unwrap().value;
        assert!(sol.bound_val().unwrap() <= b_uniform + 1e-12);
    }

    #[test]
    fn sq_extreme_spread_flags_infeasible() {
        let profile = RiskProfile::unlabeled(&[0.0, 0.0, 0.0, 0.9], 20).unwrap();
        let c = cfg(Distance::Sq, 4, 20, 0.1);
        let (sol, _) = fp_sq_subset(&profile, &c, 4, None).unwrap();
        assert!(!sol.feasible);
    }

    #[test]
    fn sq_fixed_point_is_idempotent() {
        let profile = RiskProfile::unlabeled(&[0.2, 0.22, 0.24, 0.26, 0.3], 120).unwrap();
        let c = cfg(Distance::Sq, 5, 120, 0.05);
        let (sol, state) = fp_sq_subset(&profile, &c, 5, None).unwrap();
        assert!(sol.feasible);
        let (_, state2) = fp_sq_subset(&profile, &c, 5, Some(&state.iterate)).unwrap();
        assert!(state2.iteration <= 2);
        assert!(sup_norm_diff(&state.iterate, &state2.iterate) < 1e-10);
    }

    #[test]
    fn kl_equal_nonzero_risks_uniform() {
        let profile = RiskProfile::unlabeled(&[0.3; 6], 50).unwrap();
        let c = cfg(Distance::Kl, 6, 50, 0.05);
        let (sol, state) = fp_kl_subset(&profile, &c, 6, None).unwrap();
        assert!(state.converged && sol.feasible);
        for &w in &state.iterate {
            assert!((w - 1.0 / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kl_separable_profile_uniform_with_limit_bound() {
        let profile = RiskProfile::unlabeled(&[0.0; 8], 50).unwrap();
        let c = cfg(Distance::Kl, 8, 50, 0.05);
        let (sol, _) = fp_kl_subset(&profile, &c, 8, None).unwrap();
        assert!(sol.feasible);
        let budget = (8.0 * (1.0 / 8.0) * i_r_kl(50).unwrap().value / 0.05f64).sqrt();
        let expect = 1.0 - (-budget).exp();
        assert!((sol.bound_val().unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn kl_worked_profile_beats_uniform_and_orders_weights() {
        let profile = RiskProfile::unlabeled(&[0.1, 0.2, 0.3, 0.4], 50).unwrap();
        let c = cfg(Distance::Kl, 4, 50, 0.05);
        let (sol, state) = fp_kl_subset(&profile, &c, 4, None).unwrap();
        assert!(state.converged);
        let q = sol.posterior.as_ref().unwrap();
        for w in q.weights().windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        let uniform = Posterior::uniform(4, Method::KlFp);
        let b_uniform = bound_kl(&uniform, &c, &profile).unwrap().value;
        assert!(sol.bound_val().unwrap() <= b_uniform + 1e-12);
    }

    #[test]
    fn kl_fixed_point_is_idempotent() {
        let profile = RiskProfile::unlabeled(&[0.08, 0.14, 0.22, 0.33], 60).unwrap();
        let c = cfg(Distance::Kl, 4, 60, 0.05);
        let (sol, state) = fp_kl_subset(&profile, &c, 4, None).unwrap();
        assert!(sol.feasible);
        let (_, state2) = fp_kl_subset(&profile, &c, 4, Some(&state.iterate)).unwrap();
        assert!(sup_norm_diff(&state.iterate, &state2.iterate) < 1e-10);
    }

    #[test]
    fn kl_mixed_zero_support_flees_to_zero_risk() {
        // a support mixing exact-zero and positive risks drives the mass
        // onto the zero-risk classifiers; the pinned iterate is flagged
        // infeasible and the search settles on the zero-risk prefix
        let profile = RiskProfile::unlabeled(&[0.0, 0.0, 0.2, 0.3], 60).unwrap();
        let c = cfg(Distance::Kl, 4, 60, 0.05);
        let (sol, state) = fp_kl_subset(&profile, &c, 4, None).unwrap();
        assert!(state.converged);
        assert!(!sol.feasible);
        assert!(state.iterate[0] > 0.49 && state.iterate[1] > 0.49);
        let best = crate::opt::ordered_subset_search(&profile, &c).unwrap();
        assert_eq!(best.h_prime, 2);
        let q = best.posterior.unwrap();
        assert_eq!(&q.weights()[..2], &[0.5, 0.5]);
    }

    #[test]
    fn kl_flipped_variant_reverses_ordering() {
        let profile = RiskProfile::unlabeled(&[0.1, 0.2, 0.3, 0.4], 50).unwrap();
        let c = cfg(Distance::Kl, 4, 50, 0.05);
        let (sol, _) = fp_kl_subset_variant(&profile, &c, 4, None, true).unwrap();
        let q = sol.posterior.unwrap();
        // highest risk gets the largest weight under the flipped sign
        assert!(q.weights()[3] > q.weights()[0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let profile = RiskProfile::unlabeled(&[0.1, 0.2], 50).unwrap();
        let c = cfg(Distance::Sq, 2, 50, 0.05);
        assert!(fp_sq_subset(&profile, &c, 1, None).is_err());
        assert!(fp_sq_subset(&profile, &c, 3, None).is_err());
        assert!(fp_sq_subset(&profile, &c, 2, Some(&[0.5, 0.4, 0.1])).is_err());
        let skewed =
            BoundConfig::new(Distance::Sq, 50, 0.05, Prior::new(vec![0.8, 0.2]).unwrap()).unwrap();
        assert!(fp_sq_subset(&profile, &skewed, 2, None).is_err());
    }
}
