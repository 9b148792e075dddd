//! Comparative study orchestration: run every posterior method on a risk
//! profile, attach test-error / concentration / sparsity metrics and
//! timings, and assemble machine-readable reports.

pub mod cv;
pub mod report;

pub use cv::{cross_validate, CvReport};
pub use report::{
    read_profile_csv, run_pipeline, write_profile_csv, write_report_json, write_table2_csv,
    write_table5_csv, ProfileRow, RunReport, RunSettings,
};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::bound::bound_kl;
use crate::ccp::{ccp_multistart, CcpFailure};
use crate::error::{Error, Result};
use crate::opt::{gibbs_kl_posterior, ordered_subset_search};
use crate::risk::{BoundConfig, Distance, Posterior, RiskProfile};

/// Significance levels reported for the posterior CDF sparsity measure.
pub const N_ALPHA_LEVELS: [f64; 3] = [0.8, 0.9, 0.95];

/// Posterior-weighted average of per-classifier test errors.
pub fn gibbs_test_error(q: &Posterior, test_risks: &[f64]) -> Result<f64> {
    if test_risks.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: test_risks.len(),
            right: q.len(),
        });
    }
    Ok(q.weights()
        .iter()
        .zip(test_risks)
        .map(|(&w, &t)| w * t)
        .sum())
}

/// Concentration of a posterior: the l2 norm of the weight vector
/// (Herfindahl-Hirschman index). Ranges from `1/sqrt(H)` (uniform) to 1
/// (degenerate).
pub fn hhi(q: &Posterior) -> f64 {
    q.weights().iter().map(|&w| w * w).sum::<f64>().sqrt()
}

/// Sparsity: the minimal number of lowest-risk classifiers whose
/// cumulative posterior mass reaches `alpha`.
pub fn n_alpha(q: &Posterior, alpha: f64) -> usize {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let mut cum = 0.0;
    for (i, &w) in q.weights().iter().enumerate() {
        cum += w;
        if cum >= alpha - 1e-12 {
            return i + 1;
        }
    }
    q.len()
}

/// Per-method row of the comparison report.
#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: String,
    /// The PAC-Bayes bound; absent for baselines reported without one.
    pub bound: Option<f64>,
    pub gibbs_test_error: f64,
    pub support_size: usize,
    pub hhi: f64,
    /// `alpha -> N(alpha)`, keys "0.8", "0.9", "0.95".
    pub n_alpha: BTreeMap<String, usize>,
    pub wall_time_s: f64,
}

/// Knobs for [`run_comparison`].
#[derive(Debug, Clone)]
pub struct ComparisonOptions {
    pub distances: Vec<Distance>,
    pub enable_ccp: bool,
    pub ccp_starts: usize,
    pub seed: u64,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            distances: Distance::ALL.to_vec(),
            enable_ccp: false,
            ccp_starts: 1000,
            seed: 0,
        }
    }
}

/// Output of [`run_comparison`]: one report per method plus the full
/// posterior weight vectors (sorted-risk order) for plotting.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub methods: Vec<MethodReport>,
    pub posteriors: BTreeMap<String, Vec<f64>>,
    /// Per-method failures encountered; the run continues past them.
    pub failures: Vec<(String, String)>,
}

impl Comparison {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// Total wall time of the posterior-optimization phase (every method
    /// except the cross-validation baseline, which is timed separately).
    pub fn optimize_wall_time_s(&self) -> f64 {
        self.methods.iter().map(|m| m.wall_time_s).sum()
    }
}

fn method_report(
    name: &str,
    bound: Option<f64>,
    q: &Posterior,
    support_size: usize,
    test_risks: &[f64],
    wall_time_s: f64,
) -> Result<MethodReport> {
    let mut levels = BTreeMap::new();
    for alpha in N_ALPHA_LEVELS {
        levels.insert(format!("{alpha}"), n_alpha(q, alpha));
    }
    Ok(MethodReport {
        method: name.to_string(),
        bound,
        gibbs_test_error: gibbs_test_error(q, test_risks)?,
        support_size,
        hhi: hhi(q),
        n_alpha: levels,
        wall_time_s,
    })
}

/// Runs the ordered-subset search for each requested distance, the Gibbs
/// baseline, and optionally the CCP multistart, against one profile.
/// `test_risks` must be in sorted-risk order. Per-method failures are
/// recorded and the run continues.
pub fn run_comparison(
    profile: &RiskProfile,
    test_risks: &[f64],
    cfg_base: &BoundConfig,
    options: &ComparisonOptions,
) -> Result<Comparison> {
    if !cfg_base.prior.is_uniform() {
        return Err(Error::NonUniformPrior);
    }
    if test_risks.len() != profile.h() {
        return Err(Error::LengthMismatch {
            left: test_risks.len(),
            right: profile.h(),
        });
    }
    let mut methods = Vec::new();
    let mut posteriors = BTreeMap::new();
    let mut failures = Vec::new();

    for &distance in &options.distances {
        let name = distance.as_str();
        let started = Instant::now();
        match ordered_subset_search(profile, &cfg_base.with_distance(distance)) {
            Ok(sol) => {
                let elapsed = started.elapsed().as_secs_f64();
                let q = sol
                    .posterior
                    .as_ref()
                    .expect("feasible search result has a posterior");
                let report =
                    method_report(name, sol.bound_val(), q, sol.h_prime, test_risks, elapsed)?;
                posteriors.insert(name.to_string(), q.weights().to_vec());
                methods.push(report);
            }
            Err(e) => failures.push((name.to_string(), e.to_string())),
        }
    }

    let started = Instant::now();
    match gibbs_kl_posterior(profile, profile.m()) {
        Ok(q) => {
            let elapsed = started.elapsed().as_secs_f64();
            let report = method_report("gibbs", None, &q, q.len(), test_risks, elapsed)?;
            posteriors.insert("gibbs".to_string(), q.weights().to_vec());
            methods.push(report);
        }
        Err(e) => failures.push(("gibbs".to_string(), e.to_string())),
    }

    if options.enable_ccp {
        let started = Instant::now();
        let cfg_kl = cfg_base.with_distance(Distance::Kl);
        match ccp_multistart(profile, &cfg_kl, options.ccp_starts, options.seed) {
            Ok(batch) => {
                let elapsed = started.elapsed().as_secs_f64();
                match batch.summary.best_run {
                    Some(best) => {
                        let run = &batch.runs[best];
                        let q = run.posterior.as_ref().expect("best run has a posterior");
                        let support = q.weights().iter().filter(|&&w| w > 1e-10).count();
                        let report =
                            method_report("ccp", run.r_value, q, support, test_risks, elapsed)?;
                        posteriors.insert("ccp".to_string(), q.weights().to_vec());
                        methods.push(report);
                    }
                    None => {
                        let all_zero = batch
                            .runs
                            .iter()
                            .all(|r| r.failure == Some(CcpFailure::ZeroEmpiricalRisk));
                        let reason = if all_zero {
                            "zero empirical risk: no subgradient at the boundary".to_string()
                        } else {
                            "no start produced a usable optimum".to_string()
                        };
                        failures.push(("ccp".to_string(), reason));
                    }
                }
            }
            Err(e) => failures.push(("ccp".to_string(), e.to_string())),
        }
    }

    Ok(Comparison {
        methods,
        posteriors,
        failures,
    })
}

/// Convenience: the kl bound of an arbitrary posterior, used to sanity
/// check baselines against the empirical term they must dominate.
pub fn kl_bound_of(q: &Posterior, cfg: &BoundConfig, profile: &RiskProfile) -> Result<f64> {
    Ok(bound_kl(q, cfg, profile)?.value)
}
