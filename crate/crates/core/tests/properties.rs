//! Property tests for the simplex, divergence and optimizer invariants.

use proptest::prelude::*;

use chi2pb::bound::{bound_lin, bound_sq, kl_binary, kl_upper_inverse};
use chi2pb::experiment::{gibbs_test_error, hhi, n_alpha};
use chi2pb::opt::{fp_kl_subset, fp_sq_subset, gibbs_kl_posterior};
use chi2pb::{chi2_divergence, BoundConfig, Distance, Method, Posterior, Prior, RiskProfile};

/// Strategy: a probability vector of the given length with strictly
/// positive entries.
fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1.0f64, len).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / sum).collect()
    })
}

fn risks(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..0.6f64, len)
}

proptest! {
    #[test]
    fn chi2_nonnegative_and_zero_only_at_prior(q in simplex(6), p in simplex(6)) {
        let prior = Prior::new(p.clone()).unwrap();
        let posterior = Posterior::new(q.clone(), 6, Method::BruteForce).unwrap();
        let div = chi2_divergence(&posterior, &prior).unwrap();
        prop_assert!(div >= -1e-12);
        let gap: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        if gap > 1e-6 {
            prop_assert!(div > 0.0);
        }
        // exact identity case
        let at_prior = Posterior::new(p.clone(), 6, Method::BruteForce).unwrap();
        prop_assert!(chi2_divergence(&at_prior, &prior).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sorting_round_trips(raw in risks(9)) {
        let profile = RiskProfile::unlabeled(&raw, 50).unwrap();
        for w in profile.risks().windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let mut recovered = vec![0.0; raw.len()];
        for (pos, &orig) in profile.perm().iter().enumerate() {
            recovered[orig] = profile.risks()[pos];
        }
        prop_assert_eq!(recovered, raw);
    }

    #[test]
    fn kl_round_trip(p_hat in 0.0..0.9f64, eps in 1e-8..1.0f64) {
        // keep the root away from the bisection cap
        let eps = eps.min(0.8 * kl_binary(p_hat, 0.999).unwrap());
        let r = kl_upper_inverse(p_hat, eps);
        let back = kl_binary(p_hat, r).unwrap();
        prop_assert!((back - eps).abs() < 1e-9, "p {} eps {} r {} back {}", p_hat, eps, r, back);
        prop_assert!(r >= p_hat);
    }

    #[test]
    fn kl_binary_positive_definite(p_hat in 0.0..=1.0f64, q in 1e-6..0.999_999f64) {
        let v = kl_binary(p_hat, q).unwrap();
        prop_assert!(v >= 0.0);
        if (p_hat - q).abs() > 1e-6 {
            prop_assert!(v > 0.0);
        }
        prop_assert!(kl_binary(q, q).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bounds_invariant_under_joint_permutation(
        raw_risks in risks(5),
        q in simplex(5),
        shift in 0usize..5,
    ) {
        // rotating (risk, weight) jointly leaves lin/sq bounds unchanged
        // (uniform prior is itself permutation invariant)
        let rotate = |v: &[f64]| -> Vec<f64> {
            (0..v.len()).map(|i| v[(i + shift) % v.len()]).collect()
        };
        let eval = |r: &[f64], w: &[f64], fourth: bool| -> f64 {
            let emp: f64 = r.iter().zip(w).map(|(a, b)| a * b).sum();
            let chi1: f64 = w.iter().map(|x| x * x).sum::<f64>() * 5.0;
            if fourth {
                emp + (chi1 * chi2pb::moments::i_r_sq(60).unwrap().value / 0.05).powf(0.25)
            } else {
                emp + (chi1 / (4.0 * 60.0 * 0.05)).sqrt()
            }
        };
        for fourth in [false, true] {
            let a = eval(&raw_risks, &q, fourth);
            let b = eval(&rotate(&raw_risks), &rotate(&q), fourth);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fp_weights_decrease_with_risk(raw in risks(6), kl in proptest::bool::ANY) {
        let profile = RiskProfile::unlabeled(&raw, 80).unwrap();
        let d = if kl { Distance::Kl } else { Distance::Sq };
        let cfg = BoundConfig::new(d, 80, 0.05, Prior::uniform(6)).unwrap();
        let result = if kl {
            fp_kl_subset(&profile, &cfg, 6, None)
        } else {
            fp_sq_subset(&profile, &cfg, 6, None)
        };
        let (sol, state) = result.unwrap();
        if state.converged {
            let q = sol.posterior.unwrap();
            for i in 0..5 {
                if profile.risks()[i] < profile.risks()[i + 1] {
                    prop_assert!(
                        q.weights()[i] >= q.weights()[i + 1] - 1e-10,
                        "{:?} weights not monotone: {:?}", d, q.weights()
                    );
                }
            }
        }
    }

    #[test]
    fn gibbs_argmax_is_lowest_risk(raw in risks(7)) {
        let profile = RiskProfile::unlabeled(&raw, 40).unwrap();
        let q = gibbs_kl_posterior(&profile, 40).unwrap();
        // risks are sorted, so weights must be non-increasing
        for w in q.weights().windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-15);
        }
        prop_assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn concentration_metrics_bounds(q in simplex(10), alpha1 in 0.05..0.9f64, d_alpha in 0.01..0.09f64) {
        let posterior = Posterior::new(q, 10, Method::BruteForce).unwrap();
        let h = hhi(&posterior);
        prop_assert!(h >= 1.0 / 10.0f64.sqrt() - 1e-12);
        prop_assert!(h <= 1.0 + 1e-12);
        let alpha2 = alpha1 + d_alpha;
        prop_assert!(n_alpha(&posterior, alpha1) <= n_alpha(&posterior, alpha2));
    }

    #[test]
    fn gibbs_test_error_within_range(q in simplex(6), t in prop::collection::vec(0.0..1.0f64, 6)) {
        let posterior = Posterior::new(q, 6, Method::GibbsKl).unwrap();
        let err = gibbs_test_error(&posterior, &t).unwrap();
        let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(err >= lo - 1e-12 && err <= hi + 1e-12);
    }

    #[test]
    fn bound_evaluations_dominate_empirical_term(raw in risks(5), q in simplex(5)) {
        let profile = RiskProfile::unlabeled(&raw, 70).unwrap();
        let posterior = Posterior::new(q, 5, Method::BruteForce).unwrap();
        let cfg = BoundConfig::new(Distance::Lin, 70, 0.05, Prior::uniform(5)).unwrap();
        let lin = bound_lin(&posterior, &cfg, &profile).unwrap();
        prop_assert!(lin.value >= lin.empirical_term);
        let sq = bound_sq(&posterior, &cfg, &profile).unwrap();
        prop_assert!(sq.value >= sq.empirical_term);
    }
}
