//! Kernelized SVM training by regularized stochastic subgradient descent
//! on the hinge loss (step size `1/(lambda t)`, `T = 20 m` updates), with
//! an RBF kernel whose width comes from a pairwise-distance quantile
//! heuristic.
//!
//! The trainer is deliberately self-contained and seed-deterministic: the
//! posterior machinery downstream consumes nothing but the risk vectors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::svm::{Dataset, SplitPlan};

/// SGD update budget per training example: `T = 20 m` total steps.
pub const STEPS_PER_EXAMPLE: usize = 20;

/// A trained base classifier for one regularization value.
#[derive(Debug, Clone)]
pub struct BaseClassifier {
    pub lambda: f64,
    /// Signed dual coefficients `alpha_j y_j / (lambda T)` for the support
    /// points.
    pub dual_coeffs: Vec<f64>,
    /// Dataset row indices of the support points (subsample rows whose
    /// counter is nonzero).
    pub support_points: Vec<usize>,
    /// RBF width.
    pub gamma: f64,
    /// 0-1 error on the classifier's own training subsample.
    pub train_risk: f64,
    /// 0-1 error on the composite minus the subsample (`v` examples).
    pub valid_risk: f64,
    /// 0-1 error on the held-out test set.
    pub test_risk: f64,
}

impl BaseClassifier {
    /// Decision value for a feature row.
    pub fn decision(&self, d: &Dataset, x: &[f64]) -> f64 {
        self.support_points
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(&j, &c)| c * rbf(&d.features[j], x, self.gamma))
            .sum()
    }
}

#[inline]
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// RBF width from up to 1000 seeded random point pairs: the reciprocal of
/// the mean of the 0.1 and 0.9 quantiles of pairwise squared distance.
pub fn estimate_gamma(rows: &[&[f64]], seed: u64) -> Result<f64> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::DatasetTooSmall { min: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pairs = 1000.min(n * (n - 1) / 2);
    let mut d2: Vec<f64> = Vec::with_capacity(n_pairs);
    while d2.len() < n_pairs {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        d2.push(squared_distance(rows[i], rows[j]));
    }
    d2.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let denom = 0.5 * (quantile(&d2, 0.1) + quantile(&d2, 0.9));
    if denom <= 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(1.0 / denom)
}

/// Linear-interpolation quantile of a sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Trains one classifier: subsamples `m` composite rows (without
/// replacement), runs `T = 20 m` kernel-SGD updates, and reports 0-1 risks
/// on the subsample, its complement within the composite, and the test
/// set.
pub fn train_base(
    d: &Dataset,
    plan: &SplitPlan,
    lambda: f64,
    gamma: f64,
    seed: u64,
) -> Result<BaseClassifier> {
    if !(lambda > 0.0) {
        return Err(Error::TrainingDiverged(lambda));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = plan.composite();
    pool.shuffle(&mut rng);
    let m = plan.train_idx.len();
    let subsample: Vec<usize> = pool[..m].to_vec();
    let holdout: Vec<usize> = pool[m..].to_vec();

    // Kernel SGD on the hinge loss. alpha[j] counts margin violations of
    // subsample row j; the decision value at step t is
    // (1/(lambda t)) * sum_j alpha_j y_j K(x_j, x).
    let t_total = STEPS_PER_EXAMPLE * m;
    let mut alpha = vec![0u32; m];
    for t in 1..=t_total {
        let pick = rng.random_range(0..m);
        let x = &d.features[subsample[pick]];
        let mut f = 0.0;
        for (j, &a) in alpha.iter().enumerate() {
            if a > 0 {
                f += a as f64
                    * d.labels[subsample[j]] as f64
                    * rbf(&d.features[subsample[j]], x, gamma);
            }
        }
        f /= lambda * t as f64;
        if !f.is_finite() {
            return Err(Error::TrainingDiverged(lambda));
        }
        if (d.labels[subsample[pick]] as f64) * f < 1.0 {
            alpha[pick] += 1;
        }
    }

    let scale = 1.0 / (lambda * t_total as f64);
    let mut support_points = Vec::new();
    let mut dual_coeffs = Vec::new();
    for (j, &a) in alpha.iter().enumerate() {
        if a > 0 {
            support_points.push(subsample[j]);
            dual_coeffs.push(scale * a as f64 * d.labels[subsample[j]] as f64);
        }
    }
    let clf = BaseClassifier {
        lambda,
        dual_coeffs,
        support_points,
        gamma,
        train_risk: 0.0,
        valid_risk: 0.0,
        test_risk: 0.0,
    };
    let risk_on = |idx: &[usize]| -> Result<f64> {
        let mut errors = 0usize;
        for &i in idx {
            let f = clf.decision(d, &d.features[i]);
            if !f.is_finite() {
                return Err(Error::TrainingDiverged(lambda));
            }
            if (d.labels[i] as f64) * f <= 0.0 {
                errors += 1;
            }
        }
        Ok(errors as f64 / idx.len() as f64)
    };
    let train_risk = risk_on(&subsample)?;
    let valid_risk = risk_on(&holdout)?;
    let test_risk = risk_on(&plan.test_idx)?;
    Ok(BaseClassifier {
        train_risk,
        valid_risk,
        test_risk,
        ..clf
    })
}
