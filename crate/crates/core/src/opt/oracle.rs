//! Exhaustive simplex-grid minimizer, the reference the analytic and
//! fixed-point solvers are checked against. Deliberately small-scale: it
//! enumerates every rational point `k/d` on the simplex, which blows up
//! combinatorially in `H`.

use crate::bound::{kl_upper_inverse, BoundValue};
use crate::error::{Error, Result};
use crate::moments::{i_r_kl, i_r_lin, i_r_sq};
use crate::risk::{chi2_plus_one, BoundConfig, Distance, Method, Posterior, RiskProfile};

const MAX_H: usize = 4;
const MAX_DENOMINATOR: u32 = 400;

/// Minimizes the configured bound over all grid posteriors with the given
/// denominator and returns the grid argmin with its bound.
pub fn brute_force_oracle(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    grid_denominator: u32,
) -> Result<(Posterior, BoundValue)> {
    let h = profile.h();
    if h > MAX_H {
        return Err(Error::OracleTooLarge(h));
    }
    if grid_denominator > MAX_DENOMINATOR || grid_denominator == 0 {
        return Err(Error::OracleGridTooFine(grid_denominator));
    }
    if cfg.prior.len() != h {
        return Err(Error::LengthMismatch {
            left: cfg.prior.len(),
            right: h,
        });
    }

    // constant factor of the complexity term, shared by all grid points
    let moment = match cfg.distance {
        Distance::Lin => i_r_lin(cfg.m)?.value,
        Distance::Sq => i_r_sq(cfg.m)?.value,
        Distance::Kl => i_r_kl(cfg.m)?.value,
    };
    let d = grid_denominator as f64;
    let risks = profile.risks();
    let prior = cfg.prior.weights();

    let mut counts = vec![0u32; h];
    let mut best: Option<(Vec<f64>, f64)> = None;
    enumerate_compositions(grid_denominator, h, &mut counts, &mut |counts| {
        let mut empirical = 0.0;
        let mut chi1 = 0.0;
        for i in 0..h {
            let q = counts[i] as f64 / d;
            empirical += q * risks[i];
            chi1 += q * q / prior[i];
        }
        let value = match cfg.distance {
            Distance::Lin => empirical + (chi1 * moment / cfg.delta).sqrt(),
            Distance::Sq => empirical + (chi1 * moment / cfg.delta).powf(0.25),
            Distance::Kl => {
                let budget = (chi1 * moment / cfg.delta).sqrt();
                if empirical <= 0.0 {
                    -(-budget).exp_m1()
                } else {
                    kl_upper_inverse(empirical, budget)
                }
            }
        };
        let better = best.as_ref().is_none_or(|(_, b)| value < *b);
        if better {
            best = Some((counts.iter().map(|&c| c as f64 / d).collect(), value));
        }
    });

    let (weights, value) = best.expect("grid enumeration is never empty");
    let empirical: f64 = weights.iter().zip(risks).map(|(&q, &r)| q * r).sum();
    let chi1 = chi2_plus_one(&weights, &cfg.prior);
    let complexity = match cfg.distance {
        Distance::Lin | Distance::Kl => (chi1 * moment / cfg.delta).sqrt(),
        Distance::Sq => (chi1 * moment / cfg.delta).powf(0.25),
    };
    let posterior = Posterior::new(weights, h, Method::BruteForce)?;
    let bound = BoundValue {
        value,
        empirical_term: empirical,
        complexity_term: complexity,
        distance: cfg.distance,
    };
    Ok((posterior, bound))
}

/// Visits every way of writing `total` as an ordered sum of `slots`
/// non-negative integers.
fn enumerate_compositions<F: FnMut(&[u32])>(
    total: u32,
    slots: usize,
    counts: &mut [u32],
    visit: &mut F,
) {
    fn rec<F: FnMut(&[u32])>(remaining: u32, idx: usize, counts: &mut [u32], visit: &mut F) {
        if idx == counts.len() - 1 {
            counts[idx] = remaining;
            visit(counts);
            return;
        }
        for c in 0..=remaining {
            counts[idx] = c;
            rec(remaining - c, idx + 1, counts, visit);
        }
    }
    debug_assert_eq!(counts.len(), slots);
    rec(total, 0, counts, visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::linear::opt_lin_general_prior;
    use crate::risk::Prior;

    fn cfg(d: Distance, h: usize, m: u64, delta: f64) -> BoundConfig {
        BoundConfig::new(d, m, delta, Prior::uniform(h)).unwrap()
    }

    #[test]
    fn single_classifier_is_degenerate() {
        let profile = RiskProfile::unlabeled(&[0.2], 100).unwrap();
        let (q, b) = brute_force_oracle(&profile, &cfg(Distance::Lin, 1, 100, 0.05), 50).unwrap();
        assert_eq!(q.weights(), &[1.0]);
        assert!((b.value - (0.2 + 0.05f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn grid_min_close_to_closed_form() {
        // worked two-classifier case: closed form (2/3, 1/3)
        let profile = RiskProfile::unlabeled(&[0.1, 0.3], 50).unwrap();
        let c = cfg(Distance::Lin, 2, 50, 0.05);
        let closed = opt_lin_general_prior(&profile, &c).unwrap();
        let (_, oracle) = brute_force_oracle(&profile, &c, 300).unwrap();
        let closed_bound = closed.bound_val().unwrap();
        assert!(closed_bound <= oracle.value + 1e-12);
        assert!(oracle.value - closed_bound < 1e-3);
    }

    #[test]
    fn rejects_oversized_problems() {
        let profile = RiskProfile::unlabeled(&[0.1; 5], 50).unwrap();
        assert!(brute_force_oracle(&profile, &cfg(Distance::Lin, 5, 50, 0.05), 10).is_err());
        let profile = RiskProfile::unlabeled(&[0.1; 2], 50).unwrap();
        assert!(brute_force_oracle(&profile, &cfg(Distance::Lin, 2, 50, 0.05), 500).is_err());
    }

    #[test]
    fn composition_count_matches_stars_and_bars() {
        let mut counts = vec![0u32; 3];
        let mut seen = 0usize;
        enumerate_compositions(10, 3, &mut counts, &mut |c| {
            assert_eq!(c.iter().sum::<u32>(), 10);
            seen += 1;
        });
        // C(12, 2) = 66
        assert_eq!(seen, 66);
    }
}
