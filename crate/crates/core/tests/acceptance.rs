//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//! Runs without the test harness so the lines are never captured.
//!
//! Criterion 11 cannot pass: the equal-height two-line pair is a strict
//! maximum of the reduced Liapunov function at both ε = 0.32 and ε = 0.21
//! (eigenvalues ε(sech²y − csch²y) and ε(1 − csch²y) with y = ½·atanh 2ε;
//! the second turns positive only above ε ≈ 0.4714). The check is run as
//! stated and its failure is asserted, so a change in either direction shows.

use flamelab::verify::{run_checks, Level};

const EXPECTED_FAILURES: [usize; 1] = [11];

fn main() {
    let results = run_checks(Level::Full);
    for r in &results {
        println!(
            "criterion {:>2} {}: {}: {} [{:.2}s]",
            r.id,
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail,
            r.seconds
        );
    }
    assert_eq!(results.len(), 13);
    let passed = results.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/13 passed, expected failures {EXPECTED_FAILURES:?}");
    for r in &results {
        if EXPECTED_FAILURES.contains(&r.id) {
            assert!(!r.pass, "criterion {} unexpectedly passed; revisit the analysis", r.id);
        } else {
            assert!(r.pass, "criterion {} failed: {}", r.id, r.detail);
        }
    }
}
