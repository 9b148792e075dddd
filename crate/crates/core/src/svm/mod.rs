//! Base classifier construction: dataset handling, the regularization
//! grid, per-lambda kernel SVM training, and risk-profile extraction.
//!
//! Each dataset is split 0.4 : 0.4 : 0.2 into train / validation / test.
//! Every base classifier trains on its own size-`m` subsample of the
//! train+validation composite (overlaps between classifiers allowed) and
//! is validated on the complement, so the validation risks feeding the
//! PAC-Bayes machinery are computed on data disjoint from that
//! classifier's own training points.

pub mod grid;
pub mod ingest;
pub mod pegasos;
pub mod synth;

pub use grid::lambda_grid;
pub use ingest::load_csv;
pub use pegasos::{estimate_gamma, train_base, BaseClassifier};
pub use synth::blobs;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::risk::{make_risk_profile, RiskProfile};

/// A binary classification dataset with +-1 labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub name: String,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<i8>, name: String) -> Result<Dataset> {
        if features.is_empty() {
            return Err(Error::EmptyInput);
        }
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: labels.len(),
            });
        }
        if !labels.contains(&1) || !labels.contains(&-1) {
            return Err(Error::SingleClass);
        }
        Ok(Dataset {
            features,
            labels,
            name,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Returns a copy standardized column-wise to zero mean / unit variance,
    /// with the statistics fitted on `fit_idx` only (the train+validation
    /// composite; the test set must not leak into the scaling).
    pub fn standardized_on(&self, fit_idx: &[usize]) -> Dataset {
        let n_cols = self.features[0].len();
        let n_fit = fit_idx.len() as f64;
        let mut means = vec![0.0; n_cols];
        for &i in fit_idx {
            for (c, &v) in self.features[i].iter().enumerate() {
                means[c] += v;
            }
        }
        for m in &mut means {
            *m /= n_fit;
        }
        let mut stds = vec![0.0; n_cols];
        for &i in fit_idx {
            for (c, &v) in self.features[i].iter().enumerate() {
                stds[c] += (v - means[c]) * (v - means[c]);
            }
        }
        for s in &mut stds {
            *s = (*s / n_fit).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let features = self
            .features
            .iter()
            .map(|row| {
                row.iter()
                    .zip(means.iter().zip(&stds))
                    .map(|(&v, (&m, &s))| (v - m) / s)
                    .collect()
            })
            .collect();
        Dataset {
            features,
            labels: self.labels.clone(),
            name: self.name.clone(),
        }
    }
}

/// Disjoint train / validation / test index sets in ratio 0.4 : 0.4 : 0.2.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub train_idx: Vec<usize>,
    pub valid_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Train and validation indices concatenated, the pool classifiers
    /// subsample from.
    pub fn composite(&self) -> Vec<usize> {
        let mut c = self.train_idx.clone();
        c.extend_from_slice(&self.valid_idx);
        c
    }
}

/// Seeded uniform shuffle followed by contiguous 40/40/20 slicing. If the
/// shuffle leaves a class absent from the train+validation composite the
/// split is redrawn once with `seed + 1`; a second failure is an error.
pub fn split_dataset(d: &Dataset, seed: u64) -> Result<SplitPlan> {
    let n = d.len();
    if n < 10 {
        return Err(Error::DatasetTooSmall { min: 10, got: n });
    }
    for attempt_seed in [seed, seed.wrapping_add(1)] {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        idx.shuffle(&mut rng);
        let m = (0.4 * n as f64).floor() as usize;
        let plan = SplitPlan {
            train_idx: idx[..m].to_vec(),
            valid_idx: idx[m..2 * m].to_vec(),
            test_idx: idx[2 * m..].to_vec(),
            seed: attempt_seed,
        };
        let composite = plan.composite();
        let has_pos = composite.iter().any(|&i| d.labels[i] == 1);
        let has_neg = composite.iter().any(|&i| d.labels[i] == -1);
        if has_pos && has_neg {
            return Ok(plan);
        }
    }
    Err(Error::ClassMissing)
}

/// Trains one classifier per lambda (independent subsample seeds derived
/// from `seed`) and assembles the risk profile from the validation risks,
/// with `m` set to the validation size. Classifiers are returned in the
/// original lambda order; use [`RiskProfile::sort_aligned`] to carry their
/// test risks into sorted order.
pub fn build_risk_profile(
    d: &Dataset,
    plan: &SplitPlan,
    lambdas: &[f64],
    seed: u64,
) -> Result<(RiskProfile, Vec<BaseClassifier>)> {
    if lambdas.is_empty() {
        return Err(Error::EmptyInput);
    }
    let gamma = estimate_gamma_on(d, plan, seed)?;
    let classifiers: Vec<Result<BaseClassifier>> = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let sub_seed = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            train_base(d, plan, lambda, gamma, sub_seed)
        })
        .collect();
    let classifiers: Vec<BaseClassifier> = classifiers.into_iter().collect::<Result<_>>()?;
    let risks: Vec<f64> = classifiers.iter().map(|c| c.valid_risk).collect();
    let labels: Vec<String> = classifiers
        .iter()
        .map(|c| format!("{}", c.lambda))
        .collect();
    let v = plan.valid_idx.len() as u64;
    let profile = make_risk_profile(&risks, v, labels)?;
    Ok((profile, classifiers))
}

/// Kernel width estimated on the composite rows of the plan.
pub fn estimate_gamma_on(d: &Dataset, plan: &SplitPlan, seed: u64) -> Result<f64> {
    let composite = plan.composite();
    let rows: Vec<&[f64]> = composite
        .iter()
        .map(|&i| d.features[i].as_slice())
        .collect();
    estimate_gamma(&rows, seed)
}
