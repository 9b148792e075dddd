//! Core domain types: risk profiles, priors, posteriors and bound
//! configuration.
//!
//! Every optimizer in this crate works on an ordered set of classifiers
//! ranked by non-decreasing empirical risk. [`RiskProfile`] owns that
//! ordering (with the permutation back to the original classifier index),
//! [`Posterior`] is a probability vector indexed in sorted-risk space, and
//! [`BoundConfig`] carries the sample size, confidence level and prior
//! shared by all bound evaluations.
//!
//! All types are immutable after construction and safe to share across
//! threads.

use serde::Serialize;

use crate::error::{Error, Result};

/// Simplex-sum tolerance for posteriors. Accumulated renormalization error
/// from the fixed-point iterations stays well inside this budget.
pub const POSTERIOR_SUM_TOL: f64 = 1e-10;

/// Simplex-sum tolerance for priors, which are constructed once.
pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// Distance function used by the PAC-Bayes bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// Linear distance `l - l_hat`.
    Lin,
    /// Squared distance `(l - l_hat)^2`.
    Sq,
    /// Binary KL divergence `kl(l_hat, l)`.
    Kl,
}

impl Distance {
    pub const ALL: [Distance; 3] = [Distance::Lin, Distance::Sq, Distance::Kl];

    pub fn as_str(self) -> &'static str {
        match self {
            Distance::Lin => "lin",
            Distance::Sq => "sq",
            Distance::Kl => "kl",
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lin" | "linear" => Ok(Distance::Lin),
            "sq" | "squared" => Ok(Distance::Sq),
            "kl" => Ok(Distance::Kl),
            other => Err(format!(
                "unknown distance '{other}' (expected lin, sq or kl)"
            )),
        }
    }
}

/// Which optimizer produced a posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    LinClosedForm,
    SqFp,
    KlFp,
    KlCcp,
    GibbsKl,
    BruteForce,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LinClosedForm => "lin",
            Method::SqFp => "sq",
            Method::KlFp => "kl",
            Method::KlCcp => "ccp",
            Method::GibbsKl => "gibbs",
            Method::BruteForce => "brute",
        }
    }
}

/// Empirical risks of `H` base classifiers sorted non-decreasingly,
/// together with the sort permutation and per-classifier labels.
#[derive(Debug, Clone)]
pub struct RiskProfile {
    risks: Vec<f64>,
    perm: Vec<usize>,
    m: u64,
    labels: Vec<String>,
}

/// Sorts raw risks into a [`RiskProfile`]. Ties are broken by ascending
/// original index (stable sort) so reports are reproducible.
pub fn make_risk_profile(raw_risks: &[f64], m: u64, labels: Vec<String>) -> Result<RiskProfile> {
    if raw_risks.is_empty() {
        return Err(Error::EmptyInput);
    }
    if m < 1 {
        return Err(Error::SampleSizeTooSmall { min: 1, got: m });
    }
    if labels.len() != raw_risks.len() {
        return Err(Error::LengthMismatch {
            left: raw_risks.len(),
            right: labels.len(),
        });
    }
    for &r in raw_risks {
        if !(0.0..=1.0).contains(&r) || r.is_nan() {
            return Err(Error::RiskOutOfRange(r));
        }
    }
    let mut perm: Vec<usize> = (0..raw_risks.len()).collect();
    perm.sort_by(|&a, &b| {
        raw_risks[a]
            .partial_cmp(&raw_risks[b])
            .expect("risks are not NaN")
    });
    let risks = perm.iter().map(|&i| raw_risks[i]).collect();
    let labels = perm.iter().map(|&i| labels[i].clone()).collect();
    Ok(RiskProfile {
        risks,
        perm,
        m,
        labels,
    })
}

impl RiskProfile {
    /// Profile with synthetic labels `"1".."H"` (original indexing).
    pub fn unlabeled(raw_risks: &[f64], m: u64) -> Result<RiskProfile> {
        let labels = (1..=raw_risks.len()).map(|i| i.to_string()).collect();
        make_risk_profile(raw_risks, m, labels)
    }

    /// Number of classifiers `H`.
    pub fn h(&self) -> usize {
        self.risks.len()
    }

    /// Risks in non-decreasing order.
    pub fn risks(&self) -> &[f64] {
        &self.risks
    }

    /// `perm[sorted_pos]` = original classifier index (0-based).
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Validation sample size the risks were computed on.
    pub fn m(&self) -> u64 {
        self.m
    }

    /// Labels aligned with the sorted risks.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Reorders per-classifier values given in original order into
    /// sorted-risk order.
    pub fn sort_aligned(&self, original: &[f64]) -> Result<Vec<f64>> {
        if original.len() != self.h() {
            return Err(Error::LengthMismatch {
                left: original.len(),
                right: self.h(),
            });
        }
        Ok(self.perm.iter().map(|&i| original[i]).collect())
    }

    /// Mean of the `h_prime` smallest risks.
    pub fn prefix_mean(&self, h_prime: usize) -> f64 {
        let s: f64 = self.risks[..h_prime].iter().sum();
        s / h_prime as f64
    }

    /// Population variance of the `h_prime` smallest risks.
    pub fn prefix_var(&self, h_prime: usize) -> f64 {
        let mean = self.prefix_mean(h_prime);
        let ss: f64 = self.risks[..h_prime]
            .iter()
            .map(|&r| (r - mean) * (r - mean))
            .sum();
        ss / h_prime as f64
    }
}

/// Prior distribution over the classifier set. Must be strictly positive:
/// a prior with zero mass makes the chi-squared divergence undefined.
#[derive(Debug, Clone)]
pub struct Prior {
    weights: Vec<f64>,
    is_uniform: bool,
}

impl Prior {
    pub fn uniform(h: usize) -> Prior {
        Prior {
            weights: vec![1.0 / h as f64; h],
            is_uniform: true,
        }
    }

    pub fn new(weights: Vec<f64>) -> Result<Prior> {
        if weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::NonPositivePrior);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::NotAProbability(format!("prior sums to {sum}")));
        }
        let first = weights[0];
        let is_uniform = weights.iter().all(|&w| (w - first).abs() <= 1e-15);
        Ok(Prior {
            weights,
            is_uniform,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.is_uniform
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Posterior weight vector on the probability simplex, indexed in
/// sorted-risk order. `support_size` marks the prefix carrying all mass
/// for subset-support optimizers.
#[derive(Debug, Clone)]
pub struct Posterior {
    weights: Vec<f64>,
    support_size: usize,
    method: Method,
}

impl Posterior {
    pub fn new(weights: Vec<f64>, support_size: usize, method: Method) -> Result<Posterior> {
        if weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if support_size == 0 || support_size > weights.len() {
            return Err(Error::NotAProbability(format!(
                "support size {support_size} out of range 1..={}",
                weights.len()
            )));
        }
        for &w in &weights {
            if !(w >= 0.0) {
                return Err(Error::NotAProbability(format!("negative weight {w}")));
            }
        }
        for (i, &w) in weights.iter().enumerate().skip(support_size) {
            if w != 0.0 {
                return Err(Error::NotAProbability(format!(
                    "weight {w} at index {i} beyond support size {support_size}"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > POSTERIOR_SUM_TOL {
            return Err(Error::NotAProbability(format!("posterior sums to {sum}")));
        }
        Ok(Posterior {
            weights,
            support_size,
            method,
        })
    }

    /// Point mass on the lowest-risk classifier.
    pub fn degenerate(h: usize, method: Method) -> Posterior {
        let mut weights = vec![0.0; h];
        weights[0] = 1.0;
        Posterior {
            weights,
            support_size: 1,
            method,
        }
    }

    pub fn uniform(h: usize, method: Method) -> Posterior {
        Posterior {
            weights: vec![1.0 / h as f64; h],
            support_size: h,
            method,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Posterior expectation of per-classifier values (sorted order).
    pub fn expectation(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.weights.len(),
            });
        }
        Ok(self.weights.iter().zip(values).map(|(&q, &v)| q * v).sum())
    }
}

/// Chi-squared divergence `sum q_i^2 / p_i - 1`. Non-negative, zero iff
/// the posterior equals the prior.
pub fn chi2_divergence(q: &Posterior, p: &Prior) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: q.len(),
            right: p.len(),
        });
    }
    Ok(chi2_plus_one(q.weights(), p) - 1.0)
}

/// `sum q_i^2 / p_i` = chi-squared divergence plus one. This is the factor
/// the bounds consume directly.
pub(crate) fn chi2_plus_one(weights: &[f64], p: &Prior) -> f64 {
    weights
        .iter()
        .zip(p.weights())
        .map(|(&q, &pi)| q * q / pi)
        .sum()
}

/// Parameters shared by every bound evaluation.
#[derive(Debug, Clone)]
pub struct BoundConfig {
    pub distance: Distance,
    pub m: u64,
    pub delta: f64,
    pub prior: Prior,
    /// Positivity floor used by fixed-point iterates; closed forms ignore it.
    pub epsilon_interior: f64,
}

impl BoundConfig {
    pub fn new(distance: Distance, m: u64, delta: f64, prior: Prior) -> Result<BoundConfig> {
        if m < 2 {
            return Err(Error::SampleSizeTooSmall { min: 2, got: m });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidDelta(delta));
        }
        Ok(BoundConfig {
            distance,
            m,
            delta,
            prior,
            epsilon_interior: 1e-12,
        })
    }

    pub fn with_distance(&self, distance: Distance) -> BoundConfig {
        BoundConfig {
            distance,
            ..self.clone()
        }
    }
}
