//! Exact replay of the mass-ratio inequalities behind the XY concentration
//! statement, at the construction's literal constants.
//!
//! Every left-hand side is an upper enclosure built from powers of two, small
//! rationals, and `exp(-x) <= 2^{-x}`; `e` is replaced by 3 wherever it
//! appears as a factor. A step holds when the upper end of its left-hand
//! side is at most the lower end of its right-hand side.

use crate::numerics::dyadic::format_exponent;
use crate::numerics::{exp_neg_upper, sum_enclose, Dyadic, DyadicBound, GeometricTail};
use crate::{Error, Result};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fmt::Write as _;

/// Largest positive `k` replayed individually by [`check_case`]; the tail is
/// carried by the geometric series of `noncentral_sum`.
pub const MAX_K: i64 = 40;

/// Exact schedule: `β_0 = 2^{level0_log2}`, `β_m = 2^{(m + level_offset)^power}`
/// for `m >= 1`, and half-width of `I_m` equal to `2^{-(m + window_offset)^2}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSchedule {
    pub level0_log2: i64,
    pub power: u32,
    pub level_offset: i64,
    pub window_offset: i64,
}

impl ExactSchedule {
    pub fn standard() -> Self {
        ExactSchedule {
            level0_log2: 1000,
            power: 3,
            level_offset: 10,
            window_offset: 11,
        }
    }

    /// Same windows, level exponent `(m + 10)^power`.
    pub fn with_power(power: u32) -> Self {
        ExactSchedule {
            power,
            ..Self::standard()
        }
    }

    /// `log2 β_m`.
    pub fn level_log2(&self, m: i64) -> BigInt {
        if m == 0 {
            BigInt::from(self.level0_log2)
        } else {
            BigInt::from(m + self.level_offset).pow(self.power)
        }
    }

    /// `-log2` of the half-width of `I_m`.
    pub fn window_log2(&self, m: i64) -> BigInt {
        BigInt::from(m + self.window_offset).pow(2)
    }

    fn beta(&self, m: i64) -> DyadicBound {
        DyadicBound::pow2(self.level_log2(m))
    }

    fn inv_beta(&self, m: i64) -> DyadicBound {
        DyadicBound::pow2(-self.level_log2(m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepId {
    GroundFloor,
    OffdiagPosK,
    OffdiagNegK,
    NoncentralSum,
    NoncentralAtom,
    CaseM0Eq1,
    CaseSignChange,
    CaseSameSign,
    ConclusionM0Eq1,
    ConclusionSignChange,
    ConclusionSameSign,
}

impl StepId {
    pub fn name(self) -> &'static str {
        match self {
            StepId::GroundFloor => "ground_floor",
            StepId::OffdiagPosK => "offdiag_pos_k",
            StepId::OffdiagNegK => "offdiag_neg_k",
            StepId::NoncentralSum => "noncentral_sum",
            StepId::NoncentralAtom => "noncentral_atom",
            StepId::CaseM0Eq1 => "case_m0_eq_1",
            StepId::CaseSignChange => "case_sign_change",
            StepId::CaseSameSign => "case_same_sign",
            StepId::ConclusionM0Eq1 => "conclusion_m0_eq_1",
            StepId::ConclusionSignChange => "conclusion_sign_change",
            StepId::ConclusionSameSign => "conclusion_same_sign",
        }
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofStep {
    pub id: StepId,
    pub m0: i64,
    pub k: Option<i64>,
}

impl ProofStep {
    pub fn new(id: StepId, m0: i64) -> Self {
        ProofStep { id, m0, k: None }
    }

    /// Off-diagonal step for `Δ_{m₀+k}`, positive or negative by the sign of `k`.
    pub fn offdiag(m0: i64, k: i64) -> Self {
        let id = if k >= 1 {
            StepId::OffdiagPosK
        } else {
            StepId::OffdiagNegK
        };
        ProofStep { id, m0, k: Some(k) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub step: ProofStep,
    pub lhs: DyadicBound,
    pub rhs: DyadicBound,
    pub holds: bool,
}

impl StepReport {
    fn new(step: ProofStep, lhs: DyadicBound, rhs: DyadicBound) -> Self {
        let holds = lhs.certainly_le(&rhs);
        StepReport {
            step,
            lhs,
            rhs,
            holds,
        }
    }
}

fn int(n: i64) -> DyadicBound {
    DyadicBound::from_int(n)
}

fn pow2(e: impl Into<BigInt>) -> DyadicBound {
    DyadicBound::pow2(e)
}

fn range(msg: String) -> Error {
    Error::Range(msg)
}

/// `c · 2^{e} · exp(-x)`.
fn scaled_exp(c: DyadicBound, e: BigInt, x: &DyadicBound) -> Result<DyadicBound> {
    c.mul_pow2(&e)?.mul(&exp_neg_upper(x)?)
}

/// `2^{-20-m₀} + 2 · 2^{-16} Σ_{k≥1} 2^{-k m₀}`.
fn noncentral_lhs(m0: i64) -> Result<DyadicBound> {
    let tail = GeometricTail {
        first: pow2(-15 - m0),
        ratio: pow2(-m0),
    };
    sum_enclose(&[pow2(-20 - m0)], Some(&tail))
}

pub fn check_step(step: ProofStep, s: &ExactSchedule) -> Result<StepReport> {
    let m0 = step.m0;
    if m0 < 1 {
        return Err(range(format!("{}: needs m0 >= 1, got {m0}", step.id)));
    }
    let w = |m: i64| s.window_log2(m);
    let (lhs, rhs) = match step.id {
        StepId::GroundFloor => {
            // ρ(T ∖ Y_1) / ρ(M_{m₀}) <= 3/2 · 2^{(m₀+10)^2} exp(-β(β₀^{-1} - β_{m₀}^{-1}))
            // at the smallest admissible β.
            let beta = s.beta(if m0 == 1 { 1 } else { m0 - 1 });
            let x = beta.mul(&s.inv_beta(0).sub(&s.inv_beta(m0))?)?;
            let lhs = scaled_exp(DyadicBound::from_ratio(3, 2), w(m0 - 1), &x)?;
            (lhs, pow2(-20 - m0))
        }
        StepId::OffdiagPosK => {
            let k = step
                .k
                .filter(|&k| k >= 1)
                .ok_or_else(|| range(format!("offdiag_pos_k: needs k >= 1, got {:?}", step.k)))?;
            // (6e) 2^{(m₀+10)^2 - (m₀+k+10)^2}, e <= 3.
            let lhs = int(18).mul_pow2(&(w(m0 - 1) - w(m0 + k - 1)))?;
            (lhs, pow2(-16 - k * m0))
        }
        StepId::OffdiagNegK => {
            let k = step.k.ok_or_else(|| range("offdiag_neg_k: missing k".into()))?;
            if k == 0 || k == -1 {
                return Err(range(format!(
                    "offdiag_neg_k: the estimate covers k != 0, -1 only, got k = {k}"
                )));
            }
            if !(k <= -2 && k >= -(m0 - 1)) {
                return Err(range(format!(
                    "offdiag_neg_k: needs -(m0 - 1) <= k <= -2, got m0 = {m0}, k = {k}"
                )));
            }
            // 6 · 2^{(m₀+10)^2 - (m₀+k+10)^2} exp(-β_{m₀-1}(β_{m₀+k}^{-1} - β_{m₀}^{-1}))
            let x = s
                .beta(m0 - 1)
                .mul(&s.inv_beta(m0 + k).sub(&s.inv_beta(m0))?)?;
            let lhs = scaled_exp(int(6), w(m0 - 1) - w(m0 + k - 1), &x)?;
            (lhs, pow2(-20 - 3 * k.abs() * m0))
        }
        StepId::NoncentralSum => (noncentral_lhs(m0)?, pow2(-13 - m0)),
        StepId::NoncentralAtom => {
            // 3 · 2^{(m₀+10)^2 - (m₀+11)^2}
            let lhs = int(3).mul_pow2(&(w(m0 - 1) - w(m0)))?;
            (lhs, pow2(-19 - m0))
        }
        StepId::CaseM0Eq1 => {
            if m0 != 1 {
                return Err(range(format!("case_m0_eq_1: needs m0 = 1, got {m0}")));
            }
            // 3/2 · 2^{11^2 - β_1 β_0^{-1}}, the ground floor with exp(-9/10 x)
            // coarsened to 2^{-x} after dropping β_1^{-1}.
            let x = s.beta(1).mul(&s.inv_beta(0))?;
            let e = &w(0) - x.lo.floor()?;
            let lhs = DyadicBound::from_ratio(3, 2).mul_pow2(&e)?;
            (lhs, pow2(-21))
        }
        StepId::CaseSignChange => {
            if m0 < 2 {
                return Err(range(format!("case_sign_change: needs m0 >= 2, got {m0}")));
            }
            // (6e) 2^{(m₀+10)^2 - (m₀+9)^2} exp(-β_{m₀} β_{m₀-1}^{-1}), e <= 3.
            let x = s.beta(m0).mul(&s.inv_beta(m0 - 1))?;
            let lhs = scaled_exp(int(18), w(m0 - 1) - w(m0 - 2), &x)?;
            (lhs, pow2(-20 - m0))
        }
        StepId::CaseSameSign => {
            if m0 < 2 {
                return Err(range(format!("case_same_sign: needs m0 >= 2, got {m0}")));
            }
            // 3 · 2^{(m₀+9)^2 - (m₀+10)^2}
            let lhs = int(3).mul_pow2(&(w(m0 - 2) - w(m0 - 1)))?;
            (lhs, pow2(-17 - m0))
        }
        StepId::ConclusionM0Eq1 | StepId::ConclusionSignChange | StepId::ConclusionSameSign => {
            return Err(range(format!(
                "{}: conclusions are produced by check_case",
                step.id
            )))
        }
    };
    Ok(StepReport::new(step, lhs, rhs))
}

/// Aggregates the right-hand sides of `parts` and compares the sum with
/// `2^{-12-m₀}`. Holds only if every part holds as well.
fn conclusion(id: StepId, m0: i64, parts: &[&StepReport]) -> Result<StepReport> {
    let rhs: Vec<DyadicBound> = parts.iter().map(|r| r.rhs.clone()).collect();
    let lhs = sum_enclose(&rhs, None)?;
    let mut r = StepReport::new(ProofStep::new(id, m0), lhs, pow2(-12 - m0));
    r.holds &= parts.iter().all(|p| p.holds);
    Ok(r)
}

/// Every step used for a given `m₀`: ground floor, off-diagonal terms for
/// `k` in `-(m₀-1)..=-2` and `1..=MAX_K`, the two noncentral bounds, the case
/// analysis (both branches when `m₀ >= 2`) and one conclusion per branch.
///
/// The conclusions also require the steps feeding the noncentral sum; all
/// their reports are included in the output.
pub fn check_case(m0: i64, s: &ExactSchedule) -> Result<Vec<StepReport>> {
    if m0 < 1 {
        return Err(range(format!("check_case: needs m0 >= 1, got {m0}")));
    }
    let mut steps = vec![ProofStep::new(StepId::GroundFloor, m0)];
    steps.extend((-(m0 - 1)..=-2).map(|k| ProofStep::offdiag(m0, k)));
    steps.extend((1..=MAX_K).map(|k| ProofStep::offdiag(m0, k)));
    steps.push(ProofStep::new(StepId::NoncentralSum, m0));
    steps.push(ProofStep::new(StepId::NoncentralAtom, m0));
    if m0 == 1 {
        steps.push(ProofStep::new(StepId::CaseM0Eq1, m0));
    } else {
        steps.push(ProofStep::new(StepId::CaseSignChange, m0));
        steps.push(ProofStep::new(StepId::CaseSameSign, m0));
    }
    let mut reports = steps
        .into_par_iter()
        .map(|st| check_step(st, s))
        .collect::<Result<Vec<_>>>()?;
    let find = |id: StepId| reports.iter().find(|r| r.step.id == id).expect("step present");
    let feeding_ok = reports
        .iter()
        .filter(|r| matches!(r.step.id, StepId::GroundFloor | StepId::OffdiagPosK | StepId::OffdiagNegK))
        .all(|r| r.holds);
    let sum = find(StepId::NoncentralSum);
    let atom = find(StepId::NoncentralAtom);
    let branches: Vec<(StepId, StepId)> = if m0 == 1 {
        vec![(StepId::ConclusionM0Eq1, StepId::CaseM0Eq1)]
    } else {
        vec![
            (StepId::ConclusionSignChange, StepId::CaseSignChange),
            (StepId::ConclusionSameSign, StepId::CaseSameSign),
        ]
    };
    let mut concl = Vec::new();
    for (cid, case) in branches {
        let mut r = conclusion(cid, m0, &[sum, atom, find(case)])?;
        r.holds &= feeding_ok;
        concl.push(r);
    }
    reports.extend(concl);
    Ok(reports)
}

/// First failing report across `m₀ = 1..=max_m0`.
pub fn first_failure(max_m0: i64, s: &ExactSchedule) -> Result<Option<StepReport>> {
    for m0 in 1..=max_m0 {
        if let Some(r) = check_case(m0, s)?.into_iter().find(|r| !r.holds) {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

pub const CSV_HEADER: &str = "id,m0,k,lhs_mantissa,lhs_exponent,rhs_mantissa,rhs_exponent,holds";

fn mantissa_str(d: &Dyadic) -> String {
    if d.is_zero() {
        "0".into()
    } else if d.is_negative() {
        format!("-{}", d.mantissa())
    } else {
        d.mantissa().to_string()
    }
}

fn exponent_str(d: &Dyadic) -> String {
    if d.is_zero() {
        "0".into()
    } else {
        format_exponent(d.exponent())
    }
}

impl StepReport {
    /// One CSV row: the upper end of the left-hand side and the lower end of
    /// the right-hand side as `mantissa · 2^exponent`.
    pub fn csv_row(&self) -> String {
        let k = self.step.k.map(|k| k.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step.id,
            self.step.m0,
            k,
            mantissa_str(&self.lhs.hi),
            exponent_str(&self.lhs.hi),
            mantissa_str(&self.rhs.lo),
            exponent_str(&self.rhs.lo),
            self.holds
        )
    }
}

pub fn reports_to_csv(reports: &[StepReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}
