//! Linear search over ordered-subset supports for the globally optimal
//! posterior under a uniform prior.

use rayon::prelude::*;

use crate::bound::bound_value;
use crate::error::{Error, Result};
use crate::opt::fixed_point::{fp_kl_subset, fp_sq_subset};
use crate::opt::linear::{opt_lin_subset, warm_start_h};
use crate::opt::SubsetSolution;
use crate::risk::{BoundConfig, Distance, Method, Posterior, RiskProfile};

/// Solves the size-`h_prime` subproblem for the configured distance.
/// `h_prime = 1` is the degenerate posterior on the lowest risk, evaluated
/// directly (the subset formulas need a variance, hence `H' >= 2`).
pub fn subset_solution_at(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    h_prime: usize,
) -> Result<SubsetSolution> {
    if h_prime == 1 {
        let method = method_for(cfg.distance);
        let posterior = Posterior::degenerate(profile.h(), method);
        let bound = bound_value(&posterior, cfg, profile)?;
        return Ok(SubsetSolution {
            h_prime: 1,
            posterior: Some(posterior),
            bound: Some(bound),
            feasible: true,
            defined: true,
        });
    }
    match cfg.distance {
        Distance::Lin => opt_lin_subset(profile, cfg, h_prime),
        Distance::Sq => fp_sq_subset(profile, cfg, h_prime, None).map(|(s, _)| s),
        Distance::Kl => fp_kl_subset(profile, cfg, h_prime, None).map(|(s, _)| s),
    }
}

fn method_for(distance: Distance) -> Method {
    match distance {
        Distance::Lin => Method::LinClosedForm,
        Distance::Sq => Method::SqFp,
        Distance::Kl => Method::KlFp,
    }
}

/// Sweeps `H' = 1..=H`, skipping undefined or infeasible sizes, and
/// returns the feasible solution with the smallest bound (ties to the
/// smaller support). `H' = 1` is always feasible, so a result always
/// exists.
pub fn ordered_subset_search(profile: &RiskProfile, cfg: &BoundConfig) -> Result<SubsetSolution> {
    if !cfg.prior.is_uniform() {
        return Err(Error::NonUniformPrior);
    }
    let h = profile.h();
    let solutions: Vec<Result<SubsetSolution>> = (1..=h)
        .into_par_iter()
        .map(|h_prime| subset_solution_at(profile, cfg, h_prime))
        .collect();
    let mut best: Option<SubsetSolution> = None;
    for sol in solutions {
        let sol = sol?;
        if !(sol.defined && sol.feasible) {
            continue;
        }
        let Some(value) = sol.bound_val() else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => value < b.bound_val().expect("feasible solutions carry a bound"),
        };
        if better {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| {
        Error::MalformedProfile("no feasible support size (H' = 1 should always be)".into())
    })
}

/// Warm-started descent for the linear distance: seeds the support size
/// where the two components of the closed-form bound cross, repairs an
/// undefined/infeasible seed by decrementing, then walks downhill while
/// the bound improves. An accelerator; the exhaustive sweep remains the
/// reference.
pub fn ordered_subset_search_warm(
    profile: &RiskProfile,
    cfg: &BoundConfig,
) -> Result<SubsetSolution> {
    if !cfg.prior.is_uniform() {
        return Err(Error::NonUniformPrior);
    }
    if cfg.distance != Distance::Lin {
        return ordered_subset_search(profile, cfg);
    }
    let h = profile.h();
    let mut h0 = warm_start_h(profile, cfg);
    let usable = |s: &SubsetSolution| s.defined && s.feasible && s.bound.is_some();

    let mut seed = subset_solution_at(profile, cfg, h0)?;
    while !usable(&seed) && h0 > 1 {
        h0 -= 1;
        seed = subset_solution_at(profile, cfg, h0)?;
    }
    if !usable(&seed) {
        return ordered_subset_search(profile, cfg);
    }

    let mut best = seed;
    loop {
        let here = best.bound_val().expect("usable solution has a bound");
        let mut improved = false;
        for next in [best.h_prime.wrapping_sub(1), best.h_prime + 1] {
            if next < 1 || next > h {
                continue;
            }
            let cand = subset_solution_at(profile, cfg, next)?;
            if usable(&cand) && cand.bound_val().unwrap() < here {
                best = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            return Ok(best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::Prior;
    use rand::{Rng, SeedableRng};

    fn cfg(d: Distance, h: usize, m: u64, delta: f64) -> BoundConfig {
        BoundConfig::new(d, m, delta, Prior::uniform(h)).unwrap()
    }

    #[test]
    fn equal_risks_select_full_uniform_support() {
        let profile = RiskProfile::unlabeled(&[0.2; 10], 100).unwrap();
        for d in Distance::ALL {
            let sol = ordered_subset_search(&profile, &cfg(d, 10, 100, 0.05)).unwrap();
            assert_eq!(sol.h_prime, 10, "{d:?}");
            let q = sol.posterior.unwrap();
            for &w in q.weights() {
                assert!((w - 0.1).abs() < 1e-10, "{d:?}");
            }
        }
    }

    #[test]
    fn lin_bound_decreases_until_infeasible_in_monotone_regime() {
        // moderate spread, small variance contribution: the closed-form
        // bound decreases in H' until the first infeasible size
        let risks: Vec<f64> = (0..30).map(|i| 0.05 + 0.002 * i as f64).collect();
        let profile = RiskProfile::unlabeled(&risks, 200).unwrap();
        let c = cfg(Distance::Lin, 30, 200, 0.05);
        let sol = ordered_subset_search(&profile, &c).unwrap();
        let mut last = f64::INFINITY;
        let mut first_infeasible = None;
        for hp in 2..=30 {
            let s = subset_solution_at(&profile, &c, hp).unwrap();
            if !(s.defined && s.feasible) {
                first_infeasible = Some(hp);
                break;
            }
            let v = s.bound_val().unwrap();
            assert!(v <= last + 1e-12, "bound rose at H'={hp}");
            last = v;
        }
        match first_infeasible {
            Some(hp) => assert_eq!(sol.h_prime, hp - 1),
            None => assert_eq!(sol.h_prime, 30),
        }
    }

    #[test]
    fn search_matches_manual_sweep() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let risks: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 0.6).collect();
        let profile = RiskProfile::unlabeled(&risks, 80).unwrap();
        let c = cfg(Distance::Sq, 6, 80, 0.05);
        let sol = ordered_subset_search(&profile, &c).unwrap();
        let mut manual = f64::INFINITY;
        for hp in 1..=6 {
            let s = subset_solution_at(&profile, &c, hp).unwrap();
            if s.defined && s.feasible {
                manual = manual.min(s.bound_val().unwrap());
            }
        }
        assert!((sol.bound_val().unwrap() - manual).abs() < 1e-15);
    }

    #[test]
    fn warm_search_agrees_with_exhaustive_on_random_profiles() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let risks: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 0.4).collect();
            let profile = RiskProfile::unlabeled(&risks, 150).unwrap();
            let c = cfg(Distance::Lin, 40, 150, 0.05);
            let full = ordered_subset_search(&profile, &c).unwrap();
            let warm = ordered_subset_search_warm(&profile, &c).unwrap();
            // local descent can at worst match the global sweep
            assert!(warm.bound_val().unwrap() >= full.bound_val().unwrap() - 1e-12);
        }
    }
}
