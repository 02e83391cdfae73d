//! The acceptance suite: one test per criterion, each printing its pass/fail
//! line. Criterion 8 reruns the first seven and byte-compares the reports.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use seqspace::selftest;

fn assert_criterion(report: seqspace::selftest::CriterionReport) {
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_1_oracle_equivalence() {
    assert_criterion(selftest::criterion_1(false));
}

#[test]
fn criterion_2_sandwich_and_unconditionality() {
    assert_criterion(selftest::criterion_2(false));
}

#[test]
fn criterion_3_isometry() {
    assert_criterion(selftest::criterion_3(false));
}

#[test]
fn criterion_4_closure_suite() {
    assert_criterion(selftest::criterion_4(false));
}

#[test]
fn criterion_5_restricted_inverse_suite() {
    assert_criterion(selftest::criterion_5(false));
}

#[test]
fn criterion_6_strict_singularity_gap() {
    assert_criterion(selftest::criterion_6(false));
}

#[test]
fn criterion_7_uncomplementedness_witness() {
    assert_criterion(selftest::criterion_7(false));
}

#[test]
fn criterion_8_determinism() {
    let first = selftest::run_core(false);
    let report = selftest::criterion_8(false, &first.to_json());
    assert_criterion(report);
}
