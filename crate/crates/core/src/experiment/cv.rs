//! k-fold cross-validation baseline over the same lambda grid: pick the
//! lambda with the smallest mean held-out-fold error on the
//! train+validation composite (ties to the smaller lambda), retrain on the
//! full composite, report its test error.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::svm::pegasos::{estimate_gamma, rbf, STEPS_PER_EXAMPLE};
use crate::svm::{Dataset, SplitPlan};

/// Cross-validation outcome, with the comparison columns against the
/// squared-distance stochastic classifier filled in by
/// [`CvReport::with_comparison`].
#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub best_lambda: f64,
    /// Mean held-out-fold error of the winning lambda.
    pub cv_error: f64,
    /// Test error of the winner retrained on the full composite.
    pub test_error: f64,
    pub wall_time_s: f64,
    /// `cv test error - reference test error`; set by `with_comparison`.
    pub delta_test_error: Option<f64>,
    /// `delta / cv test error`; `None` when the cv test error is zero.
    pub relative_test_error: Option<f64>,
}

impl CvReport {
    /// Fills the comparison columns against a reference test error.
    pub fn with_comparison(mut self, reference_test_error: f64) -> CvReport {
        let delta = self.test_error - reference_test_error;
        self.delta_test_error = Some(delta);
        self.relative_test_error = if self.test_error == 0.0 {
            None
        } else {
            Some(delta / self.test_error)
        };
        self
    }
}

/// Runs `folds`-fold cross-validation on the train+validation composite of
/// the plan, leaving the plan's test set untouched until the final
/// evaluation.
pub fn cross_validate(
    d: &Dataset,
    plan: &SplitPlan,
    lambdas: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::DatasetTooSmall { min: 2, got: folds });
    }
    if lambdas.is_empty() {
        return Err(Error::EmptyInput);
    }
    let started = Instant::now();

    let mut composite = plan.composite();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    composite.shuffle(&mut rng);
    let fold_slices: Vec<&[usize]> = chunk_evenly(&composite, folds);

    let rows: Vec<&[f64]> = composite
        .iter()
        .map(|&i| d.features[i].as_slice())
        .collect();
    let gamma = estimate_gamma(&rows, seed)?;

    let errors: Vec<Result<f64>> = lambdas
        .par_iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let mut total = 0.0;
            for (fi, held_out) in fold_slices.iter().enumerate() {
                let train: Vec<usize> = fold_slices
                    .iter()
                    .enumerate()
                    .filter(|&(fj, _)| fj != fi)
                    .flat_map(|(_, s)| s.iter().copied())
                    .collect();
                let fold_seed =
                    seed ^ ((li as u64) << 32 | fi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                total += fold_error(d, &train, held_out, lambda, gamma, fold_seed)?;
            }
            Ok(total / folds as f64)
        })
        .collect();
    let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;

    // argmin with ties resolved by the smaller lambda value
    let (best_lambda, cv_error) =
        lambdas
            .iter()
            .zip(&errors)
            .fold((f64::INFINITY, f64::INFINITY), |(bl, be), (&l, &e)| {
                if e < be || (e == be && l < bl) {
                    (l, e)
                } else {
                    (bl, be)
                }
            });

    let final_seed = seed ^ 0xC0FF_EE00_D15E_A5E5;
    let test_error = fold_error(
        d,
        &composite,
        &plan.test_idx,
        best_lambda,
        gamma,
        final_seed,
    )?;

    Ok(CvReport {
        best_lambda,
        cv_error,
        test_error,
        wall_time_s: started.elapsed().as_secs_f64(),
        delta_test_error: None,
        relative_test_error: None,
    })
}

/// Trains on `train` rows and returns the 0-1 error on `eval` rows. The
/// same kernel-SGD learner the ensemble uses, with `T = 20 |train|`.
fn fold_error(
    d: &Dataset,
    train: &[usize],
    eval: &[usize],
    lambda: f64,
    gamma: f64,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;
    if !(lambda > 0.0) {
        return Err(Error::TrainingDiverged(lambda));
    }
    let m = train.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_total = STEPS_PER_EXAMPLE * m;
    let mut alpha = vec![0u32; m];
    for t in 1..=t_total {
        let pick = rng.random_range(0..m);
        let x = &d.features[train[pick]];
        let mut f = 0.0;
        for (j, &a) in alpha.iter().enumerate() {
            if a > 0 {
                f += a as f64 * d.labels[train[j]] as f64 * rbf(&d.features[train[j]], x, gamma);
            }
        }
        f /= lambda * t as f64;
        if !f.is_finite() {
            return Err(Error::TrainingDiverged(lambda));
        }
        if (d.labels[train[pick]] as f64) * f < 1.0 {
            alpha[pick] += 1;
        }
    }
    let scale = 1.0 / (lambda * t_total as f64);
    let mut errors = 0usize;
    for &i in eval {
        let mut f = 0.0;
        for (j, &a) in alpha.iter().enumerate() {
            if a > 0 {
                f += a as f64
                    * d.labels[train[j]] as f64
                    * rbf(&d.features[train[j]], &d.features[i], gamma);
            }
        }
        if (d.labels[i] as f64) * (scale * f) <= 0.0 {
            errors += 1;
        }
    }
    Ok(errors as f64 / eval.len() as f64)
}

/// Splits a slice into `k` contiguous chunks whose sizes differ by at most
/// one.
fn chunk_evenly(items: &[usize], k: usize) -> Vec<&[usize]> {
    let n = items.len();
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(k);
    let mut offset = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        out.push(&items[offset..offset + len]);
        offset += len;
    }
    out
}
