use gibbs_core::numerics::{Dyadic, DyadicBound, Round};
use gibbs_core::proof_checker::*;
use gibbs_core::Error;
use num_bigint::BigInt;

fn standard() -> ExactSchedule {
    ExactSchedule::standard()
}

/// `rhs / lhs` of `a` is at most that of `b`, compared exactly.
fn slack_le(a: &StepReport, b: &StepReport) -> bool {
    let left = a.rhs.lo.mul(&b.lhs.hi, Round::Up).unwrap();
    let right = b.rhs.lo.mul(&a.lhs.hi, Round::Down).unwrap();
    left <= right
}

#[test]
fn every_case_holds_up_to_fifty() {
    for m0 in 1..=50 {
        let reps = check_case(m0, &standard()).unwrap();
        let bad: Vec<_> = reps.iter().filter(|r| !r.holds).map(|r| r.step).collect();
        assert!(bad.is_empty(), "m0 = {m0}: {bad:?}");
        let conclusions: Vec<_> = reps
            .iter()
            .filter(|r| r.step.id.name().starts_with("conclusion"))
            .collect();
        assert_eq!(conclusions.len(), if m0 == 1 { 1 } else { 2 });
        for c in conclusions {
            assert_eq!(c.rhs, DyadicBound::pow2(-12 - m0));
        }
    }
}

#[test]
fn offdiagonal_range_is_covered() {
    for m0 in [1i64, 2, 7, 30, 50] {
        let reps = check_case(m0, &standard()).unwrap();
        let mut ks: Vec<i64> = reps.iter().filter_map(|r| r.step.k).collect();
        ks.sort_unstable();
        let want: Vec<i64> = (-(m0 - 1)..=MAX_K).filter(|k| *k != 0 && *k != -1).collect();
        assert_eq!(ks, want, "m0 = {m0}");
    }
}

#[test]
fn replay_is_deterministic() {
    for m0 in [1, 2, 13] {
        let a = reports_to_csv(&check_case(m0, &standard()).unwrap());
        let b = reports_to_csv(&check_case(m0, &standard()).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn weakened_level_exponent_fails() {
    let bad = first_failure(50, &ExactSchedule::with_power(2)).unwrap();
    let bad = bad.expect("square law must fail somewhere");
    assert!(!bad.holds);
    assert!(bad.step.m0 <= 50);
    assert!(first_failure(50, &standard()).unwrap().is_none());
}

#[test]
fn narrower_windows_alone_still_hold_small_cases() {
    // Shrinking every window keeps the off-diagonal ratios favourable.
    let s = ExactSchedule {
        window_offset: 12,
        ..ExactSchedule::standard()
    };
    let r = check_step(ProofStep::offdiag(3, 2), &s).unwrap();
    assert!(r.holds);
}

#[test]
fn hypotheses_are_enforced() {
    let s = standard();
    assert!(matches!(check_step(ProofStep::new(StepId::GroundFloor, 0), &s), Err(Error::Range(_))));
    assert!(matches!(check_step(ProofStep::new(StepId::CaseSameSign, 1), &s), Err(Error::Range(_))));
    assert!(matches!(check_step(ProofStep::new(StepId::CaseM0Eq1, 2), &s), Err(Error::Range(_))));
    assert!(matches!(check_step(ProofStep::offdiag(4, -4), &s), Err(Error::Range(_))));
    assert!(matches!(check_case(0, &s), Err(Error::Range(_))));
}

#[test]
fn offdiagonal_slack_widens_with_m0() {
    let s = standard();
    for k in [1i64, 2, 5, 40] {
        let reps: Vec<_> = (1..=50).map(|m0| check_step(ProofStep::offdiag(m0, k), &s).unwrap()).collect();
        for w in reps.windows(2) {
            assert!(slack_le(&w[0], &w[1]), "k = {k}, m0 = {}", w[0].step.m0);
        }
    }
    for k in [-2i64, -3, -6] {
        let reps: Vec<_> = (1 - k..=50).map(|m0| check_step(ProofStep::offdiag(m0, k), &s).unwrap()).collect();
        for w in reps.windows(2) {
            assert!(slack_le(&w[0], &w[1]), "k = {k}, m0 = {}", w[0].step.m0);
        }
    }
}

#[test]
fn ground_floor_slack_widens_after_the_first_level() {
    // m0 = 1 and m0 = 2 both use β_1 as the smallest admissible β; from
    // m0 = 2 on the slack widens.
    let s = standard();
    let reps: Vec<_> = (2..=50)
        .map(|m0| check_step(ProofStep::new(StepId::GroundFloor, m0), &s).unwrap())
        .collect();
    for w in reps.windows(2) {
        assert!(slack_le(&w[0], &w[1]), "m0 = {}", w[0].step.m0);
    }
}

#[test]
fn float_spot_check_of_exponents() {
    // log2 of the ground-floor bound, redone in floating point:
    // log2(3/2) + (m0+10)^2 - floor(β (β_0^{-1} - β_{m0}^{-1})).
    let s = standard();
    for m0 in 2..=3i64 {
        let r = check_step(ProofStep::new(StepId::GroundFloor, m0), &s).unwrap();
        let a = ((m0 - 1 + 10) as f64).powi(3);
        let x_log2 = a - 1000.0; // β_{m0-1} β_0^{-1}; the β_{m0}^{-1} term is negligible
        let want = 1.5f64.log2() + ((m0 + 10) as f64).powi(2) - x_log2.exp2();
        let got = r.lhs.hi.log2_abs();
        assert!((got - want).abs() <= 1.0 + 1e-12 * want.abs(), "m0 = {m0}: {got} vs {want}");
        assert_eq!(r.holds, want <= (-20 - m0) as f64);
    }
    let r = check_step(ProofStep::offdiag(3, 2), &s).unwrap();
    assert!((r.lhs.hi.log2_abs() - (18f64.log2() - 56.0)).abs() < 1e-12);
    assert_eq!(r.lhs.hi, Dyadic::from_int(18).mul(&Dyadic::pow2(BigInt::from(-56)), Round::Up).unwrap());
}
