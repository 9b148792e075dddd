//! Convexity diagnostics for the squared-distance bound.
//!
//! The complexity term of the squared bound is a fourth root, and the
//! first-order convexity condition for it reduces to
//!
//! ```text
//! (sum q^2/p)^(3/4) (sum q'^2/p)^(1/4)  >=  (sum q q'/p + sum q^2/p) / 2
//! ```
//!
//! which a concrete pair of distributions violates, so the bound is not
//! convex. It is still strictly quasi-convex whenever the condition of
//! [`check_sq_quasiconvexity_condition`] holds along the segment between
//! two candidate posteriors.

use crate::moments::i_r_sq;
use crate::risk::Prior;

/// Both sides of the first-order convexity inequality at a pair `(Q, Q')`.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// True when the inequality fails, i.e. convexity is violated at this
    /// pair.
    pub violated: bool,
}

/// Evaluates the first-order convexity condition of the squared-distance
/// complexity term at `(q, q2)`.
pub fn sq_first_order_convexity(q: &[f64], q2: &[f64], p: &Prior) -> ConvexityCheck {
    let chi = |v: &[f64]| -> f64 { v.iter().zip(p.weights()).map(|(&x, &pi)| x * x / pi).sum() };
    let cross: f64 = q
        .iter()
        .zip(q2)
        .zip(p.weights())
        .map(|((&a, &b), &pi)| a * b / pi)
        .sum();
    let chi_q = chi(q);
    let chi_q2 = chi(q2);
    let lhs = chi_q.powf(0.75) * chi_q2.powf(0.25);
    let rhs = 0.5 * (cross + chi_q);
    ConvexityCheck {
        lhs,
        rhs,
        violated: lhs < rhs,
    }
}

/// The fixed ten-classifier witness pair violating first-order convexity:
/// a point mass on index 8 (1-based) against a spread distribution, under a
/// uniform prior. Returns LHS ~ 6.087086 < RHS ~ 6.172964.
pub fn check_sq_nonconvexity_witness() -> ConvexityCheck {
    let mut q = vec![0.0; 10];
    q[7] = 1.0;
    let q2 = [
        0.153_880_2,
        0.119_956_9,
        0.042_266_14,
        0.061_158_94,
        0.061_609_16,
        0.075_206_79,
        0.145_041_3,
        0.234_592_9,
        0.017_626_96,
        0.088_660_69,
    ];
    sq_first_order_convexity(&q, &q2, &Prior::uniform(10))
}

/// Strict quasi-convexity condition for the squared-distance bound along
/// the segment `alpha q + (1 - alpha) q2`:
///
/// ```text
/// ((12m-11)/(16 m^3 delta))^(1/4)
///   * ((sum (aq+(1-a)q')^2/p)^(1/4) - (sum q^2/p)^(1/4))
///   <  (1 - alpha) (E_q[risk] - E_q2[risk])
/// ```
///
/// Usable for sampling studies of the regime where the bound behaves
/// quasi-convexly.
pub fn check_sq_quasiconvexity_condition(
    q: &[f64],
    q2: &[f64],
    p: &Prior,
    risks: &[f64],
    m: u64,
    delta: f64,
    alpha: f64,
) -> bool {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let chi = |v: &[f64]| -> f64 { v.iter().zip(p.weights()).map(|(&x, &pi)| x * x / pi).sum() };
    let blend: Vec<f64> = q
        .iter()
        .zip(q2)
        .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    let constant = (i_r_sq(m).expect("m >= 2").value / delta).powf(0.25);
    let lhs = constant * (chi(&blend).powf(0.25) - chi(q).powf(0.25));
    let e_q: f64 = q.iter().zip(risks).map(|(&w, &r)| w * r).sum();
    let e_q2: f64 = q2.iter().zip(risks).map(|(&w, &r)| w * r).sum();
    let rhs = (1.0 - alpha) * (e_q - e_q2);
    lhs < rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_violates_convexity() {
        let w = check_sq_nonconvexity_witness();
        assert!((w.lhs - 6.087086).abs() < 1e-5, "lhs = {}", w.lhs);
        assert!((w.rhs - 6.172964).abs() < 1e-5, "rhs = {}", w.rhs);
        assert!(w.violated);
    }

    #[test]
    fn identical_arguments_hit_cauchy_schwarz_equality() {
        let p = Prior::uniform(4);
        let q = [0.4, 0.3, 0.2, 0.1];
        let w = sq_first_order_convexity(&q, &q, &p);
        assert!((w.lhs - w.rhs).abs() < 1e-12);
        assert!(!w.violated);

        let uniform = [0.25; 4];
        let w = sq_first_order_convexity(&uniform, &uniform, &p);
        assert!((w.lhs - w.rhs).abs() < 1e-14);
        assert!(!w.violated);
    }

    #[test]
    fn quasiconvexity_strictness_at_identical_pair() {
        let p = Prior::uniform(3);
        let q = [0.5, 0.3, 0.2];
        let risks = [0.1, 0.2, 0.3];
        // LHS = 0, RHS = 0: the strict inequality fails
        assert!(!check_sq_quasiconvexity_condition(
            &q, &q, &p, &risks, 50, 0.05, 0.5
        ));
    }

    // sampling study over the regime where the averaged risk rises while
    // the divergence falls (the one case the quasi-convexity proof needs
    // the extra condition for); logs how often the condition holds
    #[test]
    fn quasiconvexity_case_iv_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let p = Prior::uniform(5);
        let risks = [0.05, 0.15, 0.25, 0.35, 0.45];
        let draw_simplex = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            let raw: Vec<f64> = (0..5).map(|_| 0.01 + rng.random::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        };
        let chi = |v: &[f64]| -> f64 { v.iter().map(|&x| x * x * 5.0).sum() };
        let e = |v: &[f64]| -> f64 { v.iter().zip(&risks).map(|(&w, &r)| w * r).sum() };
        let mut case_iv = 0usize;
        let mut held = 0usize;
        for _ in 0..2000 {
            let q = draw_simplex(&mut rng);
            let q2 = draw_simplex(&mut rng);
            if !(e(&q) > e(&q2) && chi(&q) < chi(&q2)) {
                continue;
            }
            case_iv += 1;
            let alpha = 0.01 + 0.98 * rng.random::<f64>();
            if check_sq_quasiconvexity_condition(&q, &q2, &p, &risks, 60, 0.05, alpha) {
                held += 1;
            }
        }
        println!("case-IV pairs sampled: {case_iv}, condition held: {held}");
        assert!(case_iv > 100, "sampler never hit the regime");
    }

    #[test]
    fn quasiconvexity_alpha_near_one_limit() {
        let p = Prior::uniform(3);
        let q = [0.2, 0.3, 0.5]; // higher averaged risk
        let q2 = [0.6, 0.3, 0.1];
        let risks = [0.1, 0.2, 0.3];
        // both sides shrink to zero: just confirm the predicate evaluates
        let res = check_sq_quasiconvexity_condition(&q, &q2, &p, &risks, 50, 0.05, 0.999);
        let e_q: f64 = q.iter().zip(&risks).map(|(&w, &r)| w * r).sum();
        let e_q2: f64 = q2.iter().zip(&risks).map(|(&w, &r)| w * r).sum();
        assert!(e_q > e_q2);
        let _ = res;
    }
}
