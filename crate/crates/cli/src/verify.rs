//! Golden-value self checks: recomputes the pinned constants and worked
//! examples and compares them against their expected values. Exit 0 iff
//! every check passes.

use std::process::ExitCode;

use chi2pb::bound::{kl_binary, kl_upper_inverse};
use chi2pb::moments::{i_r_kl, i_r_lin, i_r_sq, i_r_sq_direct};
use chi2pb::opt::{
    brute_force_oracle, check_sq_nonconvexity_witness, gibbs_kl_posterior,
    lin_subset_bound_closed_form, opt_lin_general_prior, opt_lin_subset,
};
use chi2pb::{BoundConfig, Distance, Prior, RiskProfile};

struct Harness {
    failures: usize,
}

impl Harness {
    fn check(&mut self, name: &str, computed: f64, expected: f64, tol: f64) {
        let ok = (computed - expected).abs() <= tol;
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "{verdict}  {name}: computed {computed:.10}, expected {expected:.10} (tol {tol:.0e})"
        );
        if !ok {
            self.failures += 1;
        }
    }

    fn assert_true(&mut self, name: &str, ok: bool) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("{verdict}  {name}");
        if !ok {
            self.failures += 1;
        }
    }
}

pub fn cmd_verify() -> ExitCode {
    let mut h = Harness { failures: 0 };

    // moment constants
    h.check("I_lin(4)", i_r_lin(4).unwrap().value, 0.0625, 0.0);
    h.check(
        "I_lin(1840) * 4 * 1840",
        i_r_lin(1840).unwrap().value * 4.0 * 1840.0,
        1.0,
        0.0,
    );
    h.check("I_sq(2)", i_r_sq(2).unwrap().value, 13.0 / 128.0, 0.0);
    h.check("I_sq(100)", i_r_sq(100).unwrap().value, 7.43125e-5, 1e-19);
    let kl_table = [
        (50u64, 0.98, 0.0074799),
        (100, 0.99, 0.0037092),
        (200, 0.995, 0.0018470),
        (500, 0.998, 0.0007369),
        (1000, 0.999, 0.0003682),
        (1020, 0.999, 0.0003609),
        (1028, 0.999, 0.0003580),
    ];
    for (m, l_star, value) in kl_table {
        let c = i_r_kl(m).unwrap();
        h.check(&format!("I_kl({m})"), c.value, value, 1e-5);
        h.check(&format!("I_kl({m}) maximizer"), c.maximizer_l, l_star, 0.01);
    }
    let capped = i_r_kl(2000).unwrap();
    h.assert_true(
        "I_kl(2000) capped at the m=1028 value",
        capped.capped && capped.m_effective == 1028,
    );

    // the squared-distance closed form vs the numeric fourth-moment
    // supremum (informational: the closed form is the looser constant the
    // bounds use; the oracle tracks (3m-2)/(16 m^3))
    let direct = i_r_sq_direct(50, 2001).unwrap().value;
    println!(
        "INFO  I_sq(50) closed form {:.8e} vs direct supremum {:.8e} (ratio {:.4})",
        i_r_sq(50).unwrap().value,
        direct,
        i_r_sq(50).unwrap().value / direct
    );
    h.check(
        "direct sq supremum identity (3m-2)/(16m^3), m=50",
        direct,
        148.0 / 2_000_000.0,
        1e-12,
    );

    // kl inversion round trip
    let eps = kl_binary(0.1, 0.3).unwrap();
    h.check("kl(0.1, 0.3)", eps, 0.116_321_756_586_004_6, 1e-12);
    h.check(
        "kl_upper_inverse(0.1, kl(0.1, 0.3))",
        kl_upper_inverse(0.1, eps),
        0.3,
        1e-9,
    );

    // nonconvexity witness
    let w = check_sq_nonconvexity_witness();
    h.check("witness LHS", w.lhs, 6.087086, 1e-5);
    h.check("witness RHS", w.rhs, 6.172964, 1e-5);
    h.assert_true("witness violates first-order convexity", w.violated);

    // worked linear closed forms
    let profile = RiskProfile::unlabeled(&[0.1, 0.2, 0.3, 0.4], 100).unwrap();
    let cfg = BoundConfig::new(Distance::Lin, 100, 0.05, Prior::uniform(4)).unwrap();
    let sol = opt_lin_subset(&profile, &cfg, 2).unwrap();
    let q = sol.posterior.as_ref().unwrap();
    h.check(
        "lin subset q1 (H'=2)",
        q.weights()[0],
        0.580_064_076_902_543_6,
        1e-12,
    );
    let closed = lin_subset_bound_closed_form(&profile, &cfg, 2).unwrap();
    h.check(
        "lin subset bound closed form",
        closed,
        0.462_249_899_919_919_9,
        1e-12,
    );
    h.check(
        "bound_lin equals closed form",
        sol.bound_val().unwrap(),
        closed,
        1e-12,
    );

    let profile2 = RiskProfile::unlabeled(&[0.1, 0.3], 50).unwrap();
    let cfg2 = BoundConfig::new(Distance::Lin, 50, 0.05, Prior::uniform(2)).unwrap();
    let gen = opt_lin_general_prior(&profile2, &cfg2).unwrap();
    h.check(
        "lin general-prior q1",
        gen.posterior.as_ref().unwrap().weights()[0],
        2.0 / 3.0,
        1e-12,
    );
    let (_, oracle) = brute_force_oracle(&profile2, &cfg2, 300).unwrap();
    let gap = oracle.value - gen.bound_val().unwrap();
    h.assert_true(
        &format!("closed form within grid resolution of the oracle (gap {gap:.2e})"),
        (0.0..1e-3).contains(&gap),
    );

    // Gibbs baseline
    let profile3 = RiskProfile::unlabeled(&[0.1, 0.2], 10).unwrap();
    let gibbs = gibbs_kl_posterior(&profile3, 10).unwrap();
    h.check(
        "gibbs weight",
        gibbs.weights()[0],
        0.731_058_578_630_004_9,
        1e-12,
    );

    println!();
    if h.failures == 0 {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("{} check(s) failed", h.failures);
        ExitCode::FAILURE
    }
}
