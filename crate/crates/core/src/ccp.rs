//! Convex-concave procedure for the kl-distance bound minimization,
//! treated as a difference-of-convex program:
//!
//! ```text
//! min r   s.t.   kl(E_Q[risk], r)  =  sqrt((sum q^2/p) I_kl(m) / delta),
//!                r >= E_Q[risk],    q in simplex.
//! ```
//!
//! The equality splits into two DC inequalities. Each outer iteration
//! replaces the concave side of each by its supporting hyperplane at the
//! current point and solves the resulting convex subproblem with a
//! projected subgradient method under an exact penalty. The bound root `r`
//! is re-extracted exactly (bisection) at every accepted iterate, so the
//! reported `r` always satisfies the divergence constraint.
//!
//! A local heuristic by construction: different starts may land on
//! different stationary points, hence the multi-start driver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::bound_kl;
use crate::error::{Error, Result};
use crate::moments::i_r_kl;
use crate::risk::{BoundConfig, Method, Posterior, RiskProfile};

const OUTER_TOL: f64 = 1e-8;
const INNER_STEPS: usize = 5_000;
const INNER_STEP_SCALE: f64 = 0.05;
const PENALTY: f64 = 1e3;
const CONSTRAINT_TOL: f64 = 1e-6;

/// Why a run produced no usable optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CcpFailure {
    /// The averaged empirical risk sits on the boundary (typically an
    /// all-zero-risk profile), where the divergence constraint has no
    /// subgradient.
    ZeroEmpiricalRisk,
    /// The inner convex subproblem stalled or produced garbage.
    InnerSolveFailed,
    /// The outer loop exhausted its iteration budget.
    MaxIter,
}

/// Outcome of one CCP run.
#[derive(Debug, Clone)]
pub struct CcpResult {
    /// Terminal posterior, absent when the run failed before producing one.
    pub posterior: Option<Posterior>,
    /// Terminal bound root, absent on early failure.
    pub r_value: Option<f64>,
    /// Outer iterations performed.
    pub iterations: usize,
    pub converged: bool,
    /// Seed that generated the starting point (0 for caller-provided).
    pub init_seed: u64,
    pub failure: Option<CcpFailure>,
    /// Bound root at every accepted outer iterate, starting from the
    /// initial point.
    pub r_trace: Vec<f64>,
}

/// Aggregate statistics over a multi-start batch.
#[derive(Debug, Clone, Serialize)]
pub struct CcpSummary {
    pub n_runs: usize,
    pub n_failed: usize,
    pub r_min: Option<f64>,
    pub r_mean: Option<f64>,
    pub r_sd: Option<f64>,
    /// Index of the run attaining `r_min`.
    pub best_run: Option<usize>,
}

/// Multi-start batch result.
#[derive(Debug, Clone)]
pub struct CcpMultistart {
    pub runs: Vec<CcpResult>,
    pub summary: CcpSummary,
}

/// One CCP run from the given starting posterior (full length, sorted-risk
/// order). Fails fast with [`CcpFailure::ZeroEmpiricalRisk`] when the
/// averaged empirical risk of the start sits on the boundary.
pub fn ccp_solve(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    init: &[f64],
    max_outer: usize,
) -> Result<CcpResult> {
    ccp_solve_seeded(profile, cfg, init, max_outer, 0)
}

fn ccp_solve_seeded(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    init: &[f64],
    max_outer: usize,
    init_seed: u64,
) -> Result<CcpResult> {
    let h = profile.h();
    if init.len() != h {
        return Err(Error::LengthMismatch {
            left: init.len(),
            right: h,
        });
    }
    if cfg.prior.len() != h {
        return Err(Error::LengthMismatch {
            left: cfg.prior.len(),
            right: h,
        });
    }
    let sum: f64 = init.iter().sum();
    if !(sum > 0.0) || init.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::NotAProbability("ccp start".into()));
    }
    let mut q: Vec<f64> = init.iter().map(|&x| x / sum).collect();

    let risks = profile.risks();
    let expectation = |w: &[f64]| -> f64 { w.iter().zip(risks).map(|(&a, &b)| a * b).sum() };
    let l0 = expectation(&q);
    if !(l0 > 0.0 && l0 < 1.0) {
        return Ok(CcpResult {
            posterior: None,
            r_value: None,
            iterations: 0,
            converged: false,
            init_seed,
            failure: Some(CcpFailure::ZeroEmpiricalRisk),
            r_trace: Vec::new(),
        });
    }

    let moment = i_r_kl(cfg.m)?.value;
    let root_at = |w: &[f64]| -> Result<f64> {
        let posterior = Posterior::new(w.to_vec(), h, Method::KlCcp)?;
        Ok(bound_kl(&posterior, cfg, profile)?.value)
    };

    let mut r = root_at(&q)?;
    let mut trace = vec![r];
    let mut failure = Some(CcpFailure::MaxIter);
    let mut converged = false;
    let mut iterations = 0;

    for outer in 1..=max_outer {
        iterations = outer;
        let l_here = expectation(&q);
        if !(l_here > 0.0 && l_here < 1.0) {
            // drifted onto a boundary stationary point; the exact root at
            // the current iterate is already recorded
            converged = true;
            failure = None;
            break;
        }
        let proposal = solve_subproblem(profile, cfg, moment, &q, r);
        let Some(q_next) = proposal else {
            failure = Some(CcpFailure::InnerSolveFailed);
            break;
        };
        let r_next = root_at(&q_next)?;
        if r_next <= r {
            q = q_next;
            let drop = r - r_next;
            r = r_next;
            trace.push(r);
            if drop < OUTER_TOL {
                converged = true;
                failure = None;
                break;
            }
        } else {
            // the linearized subproblem no longer improves the exact root
            converged = true;
            failure = None;
            break;
        }
    }

    let posterior = Posterior::new(q, h, Method::KlCcp)?;
    if converged {
        let l_fin = posterior.expectation(risks)?;
        let budget = bound_kl(&posterior, cfg, profile)?.complexity_term;
        let residual = if l_fin > 0.0 && l_fin < 1.0 {
            (crate::bound::kl_binary(l_fin, r)? - budget).abs()
        } else {
            0.0
        };
        debug_assert!(residual <= CONSTRAINT_TOL, "constraint residual {residual}");
        debug_assert!(r >= l_fin - 1e-12);
    }
    Ok(CcpResult {
        posterior: Some(posterior),
        r_value: Some(r),
        iterations,
        converged,
        init_seed,
        failure,
        r_trace: trace,
    })
}

/// Inner convex subproblem at the linearization point `(q0, r0)`:
/// minimize `r` under the two linearized DC constraints, the simplex, and
/// `r >= E_Q[risk]`, via projected subgradient on an exact penalty.
/// Returns the best `q` found, or `None` when the iterates degenerate.
fn solve_subproblem(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    moment: f64,
    q0: &[f64],
    r0: f64,
) -> Option<Vec<f64>> {
    let h = profile.h();
    let risks = profile.risks();
    let prior = cfg.prior.weights();
    let l0: f64 = q0.iter().zip(risks).map(|(&a, &b)| a * b).sum();
    let s0: f64 = q0.iter().zip(prior).map(|(&a, &p)| a * a / p).sum();

    // constants of the two supporting hyperplanes
    let c1_coeff: Vec<f64> = {
        let scale = (moment / (cfg.delta * s0)).sqrt();
        q0.iter().zip(prior).map(|(&a, &p)| scale * a / p).collect()
    };
    let log_gap0 = (l0 / r0).ln() - ((1.0 - l0) / (1.0 - r0)).ln();
    let k2_const = ((1.0 - l0) / (1.0 - r0)).ln();
    let k2_r_coeff = (r0 - l0) / (r0 * (1.0 - r0));

    let clamp_prob = |x: f64| x.clamp(1e-12, 1.0 - 1e-12);

    let mut q = q0.to_vec();
    let mut r = r0;
    let mut best_q = q.clone();
    let mut best_score = f64::INFINITY;
    let mut grad_q = vec![0.0; h];

    for t in 1..=INNER_STEPS {
        let l: f64 = q.iter().zip(risks).map(|(&a, &b)| a * b).sum();
        let lc = clamp_prob(l);
        let rc = clamp_prob(r.max(lc));
        let s: f64 = q.iter().zip(prior).map(|(&a, &p)| a * a / p).sum();
        let sqrt_term = (s * moment / cfg.delta).sqrt();

        let k1_hat: f64 = c1_coeff.iter().zip(&q).map(|(&c, &w)| c * w).sum();
        let k2_hat = k2_const + log_gap0 * l + k2_r_coeff * (rc - r0);
        let kl_val = crate::bound::kl_binary_unchecked(lc, rc);

        let g1 = kl_val - k1_hat;
        let g2 = sqrt_term - k2_hat;
        let score = rc + PENALTY * (g1.max(0.0) + g2.max(0.0));
        if score < best_score {
            best_score = score;
            best_q.copy_from_slice(&q);
        }

        // subgradient of the penalized objective
        let log_gap = (lc / rc).ln() - ((1.0 - lc) / (1.0 - rc)).ln();
        let mut grad_r = 1.0;
        for (i, g) in grad_q.iter_mut().enumerate() {
            *g = 0.0;
            if g1 > 0.0 {
                *g += PENALTY * (risks[i] * log_gap - c1_coeff[i]);
            }
            if g2 > 0.0 {
                // d sqrt(s * I/delta) / dq_i  =  sqrt(I/delta) * (q_i/p_i) / sqrt(s)
                let d_sqrt = (moment / cfg.delta).sqrt() * (q[i] / prior[i]) / s.sqrt();
                *g += PENALTY * (d_sqrt - risks[i] * log_gap0);
            }
        }
        if g1 > 0.0 {
            grad_r += PENALTY * (rc - lc) / (rc * (1.0 - rc));
        }
        if g2 > 0.0 {
            grad_r -= PENALTY * k2_r_coeff;
        }

        let norm = (grad_q.iter().map(|g| g * g).sum::<f64>() + grad_r * grad_r).sqrt() + 1e-12;
        let step = INNER_STEP_SCALE / (t as f64).sqrt();
        for (w, g) in q.iter_mut().zip(&grad_q) {
            *w -= step * g / norm;
        }
        r -= step * grad_r / norm;

        project_simplex(&mut q);
        let l_proj: f64 = q.iter().zip(risks).map(|(&a, &b)| a * b).sum();
        r = r.clamp(l_proj, 1.0 - 1e-9);

        if q.iter().any(|w| !w.is_finite()) || !r.is_finite() {
            return None;
        }
    }
    Some(best_q)
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(w: &mut [f64]) {
    let mut sorted: Vec<f64> = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        acc += u;
        let candidate = (acc - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    for x in w.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Independent CCP runs from symmetric-Dirichlet(1) starting points (the
/// uniform law on the simplex). Bit-reproducible for a fixed seed.
pub fn ccp_multistart(
    profile: &RiskProfile,
    cfg: &BoundConfig,
    n_starts: usize,
    seed: u64,
) -> Result<CcpMultistart> {
    if n_starts == 0 {
        return Err(Error::EmptyInput);
    }
    let runs: Vec<Result<CcpResult>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let run_seed = mix_seed(seed, i as u64);
            let init = dirichlet_uniform(profile.h(), run_seed);
            ccp_solve_seeded(profile, cfg, &init, 100, run_seed)
        })
        .collect();
    let runs: Vec<CcpResult> = runs.into_iter().collect::<Result<_>>()?;

    let usable: Vec<(usize, f64)> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.failure.is_none() || r.failure == Some(CcpFailure::MaxIter))
        .filter_map(|(i, r)| r.r_value.map(|v| (i, v)))
        .collect();
    let n_failed = runs.iter().filter(|r| r.failure.is_some()).count();
    let summary = if usable.is_empty() {
        CcpSummary {
            n_runs: runs.len(),
            n_failed,
            r_min: None,
            r_mean: None,
            r_sd: None,
            best_run: None,
        }
    } else {
        let n = usable.len() as f64;
        let mean = usable.iter().map(|(_, v)| v).sum::<f64>() / n;
        let var = usable
            .iter()
            .map(|(_, v)| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        let (best_run, r_min) = usable
            .iter()
            .fold((usable[0].0, f64::INFINITY), |acc, &(i, v)| {
                if v < acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        CcpSummary {
            n_runs: runs.len(),
            n_failed,
            r_min: Some(r_min),
            r_mean: Some(mean),
            r_sd: Some(var.sqrt()),
            best_run: Some(best_run),
        }
    };
    Ok(CcpMultistart { runs, summary })
}

fn mix_seed(seed: u64, idx: u64) -> u64 {
    seed ^ idx
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0x2545_F491_4F6C_DD1D)
}

fn dirichlet_uniform(h: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // normalized Exp(1) draws are Dirichlet(1, ..., 1)
    let mut w: Vec<f64> = (0..h)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    for x in w.iter_mut() {
        if !(*x > 0.0) {
            *x = 1e-12;
        }
    }
    let sum: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= sum;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::ordered_subset_search;
    use crate::risk::{Distance, Prior};
    use rand::Rng;

    fn cfg(h: usize, m: u64, delta: f64) -> BoundConfig {
        BoundConfig::new(Distance::Kl, m, delta, Prior::uniform(h)).unwrap()
    }

    #[test]
    fn zero_risk_profile_fails_fast() {
        let profile = RiskProfile::unlabeled(&[0.0; 6], 50).unwrap();
        let c = cfg(6, 50, 0.05);
        let init = vec![1.0 / 6.0; 6];
        let res = ccp_solve(&profile, &c, &init, 50).unwrap();
        assert_eq!(res.failure, Some(CcpFailure::ZeroEmpiricalRisk));
        assert!(res.posterior.is_none());
    }

    #[test]
    fn equal_risks_converge_to_uniform() {
        let profile = RiskProfile::unlabeled(&[0.3; 5], 50).unwrap();
        let c = cfg(5, 50, 0.05);
        let init = vec![0.2; 5];
        let res = ccp_solve(&profile, &c, &init, 50).unwrap();
        assert!(res.converged, "failure: {:?}", res.failure);
        let q = res.posterior.unwrap();
        for &w in q.weights() {
            assert!((w - 0.2).abs() < 1e-8, "weights {:?}", q.weights());
        }
        let uniform = Posterior::uniform(5, Method::KlCcp);
        let expect = bound_kl(&uniform, &c, &profile).unwrap().value;
        assert!((res.r_value.unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn trace_is_non_increasing() {
        let profile = RiskProfile::unlabeled(&[0.05, 0.1, 0.2, 0.3, 0.45], 60).unwrap();
        let c = cfg(5, 60, 0.05);
        let init = dirichlet_uniform(5, 77);
        let res = ccp_solve(&profile, &c, &init, 100).unwrap();
        for pair in res.r_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "trace rose: {:?}", res.r_trace);
        }
    }

    #[test]
    fn converged_point_is_feasible() {
        let profile = RiskProfile::unlabeled(&[0.08, 0.12, 0.25, 0.4], 80).unwrap();
        let c = cfg(4, 80, 0.05);
        let res = ccp_solve(&profile, &c, &dirichlet_uniform(4, 3), 100).unwrap();
        assert!(res.converged);
        let q = res.posterior.unwrap();
        let r = res.r_value.unwrap();
        let l = q.expectation(profile.risks()).unwrap();
        assert!(r >= l - 1e-12);
        let budget = bound_kl(&q, &c, &profile).unwrap().complexity_term;
        let residual = (crate::bound::kl_binary(l, r).unwrap() - budget).abs();
        assert!(residual <= CONSTRAINT_TOL, "residual {residual}");
    }

    #[test]
    fn multistart_is_reproducible_and_dominated_by_fp() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let risks: Vec<f64> = (0..8).map(|_| 0.05 + 0.4 * rng.random::<f64>()).collect();
        let profile = RiskProfile::unlabeled(&risks, 60).unwrap();
        let c = cfg(8, 60, 0.05);

        let a = ccp_multistart(&profile, &c, 10, 7).unwrap();
        let b = ccp_multistart(&profile, &c, 10, 7).unwrap();
        assert_eq!(a.summary.r_min, b.summary.r_min);
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.r_value, y.r_value);
        }

        let fp = ordered_subset_search(&profile, &c).unwrap();
        let fp_bound = fp.bound_val().unwrap();
        assert!(
            a.summary.r_min.unwrap() >= fp_bound - 1e-4,
            "ccp min {} vs fp {}",
            a.summary.r_min.unwrap(),
            fp_bound
        );
    }

    #[test]
    fn single_start_matches_multistart_head() {
        let profile = RiskProfile::unlabeled(&[0.1, 0.2, 0.35], 50).unwrap();
        let c = cfg(3, 50, 0.05);
        let batch = ccp_multistart(&profile, &c, 1, 99).unwrap();
        let init = dirichlet_uniform(3, mix_seed(99, 0));
        let single = ccp_solve(&profile, &c, &init, 100).unwrap();
        assert_eq!(batch.runs[0].r_value, single.r_value);
    }

    #[test]
    fn simplex_projection_properties() {
        let mut w = vec![0.9, -0.3, 0.5];
        project_simplex(&mut w);
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.0));

        // already on the simplex: unchanged
        let mut w = vec![0.2, 0.3, 0.5];
        project_simplex(&mut w);
        assert!((w[0] - 0.2).abs() < 1e-12 && (w[2] - 0.5).abs() < 1e-12);
    }
}
