use super::bump::{master_bump, master_bump_cr_norm};
use super::Schedule;
use crate::numerics::LogScalar;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Representative of `x mod 1` in `[-1/2, 1/2)`; exact for `|x| < 1/2`.
pub fn wrap(x: f64) -> f64 {
    if (-0.5..0.5).contains(&x) {
        return x;
    }
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// 0 for `+`, 1/2 for `-`.
    pub fn center(self) -> f64 {
        match self {
            Sign::Plus => 0.0,
            Sign::Minus => 0.5,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn from_char(c: char) -> Option<Sign> {
        match c {
            '+' => Some(Sign::Plus),
            '-' => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// `ς(1), ς(2), ...`: an explicit prefix followed by a constant tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignSequence {
    pub prefix: Vec<Sign>,
    pub tail: Sign,
}

impl SignSequence {
    pub fn new(prefix: Vec<Sign>, tail: Sign) -> Self {
        SignSequence { prefix, tail }
    }

    pub fn constant(s: Sign) -> Self {
        SignSequence {
            prefix: Vec::new(),
            tail: s,
        }
    }

    /// `first, -first, first, ...` for `m = 1..=len`, then constant.
    pub fn alternating(first: Sign, len: usize) -> Self {
        let prefix: Vec<Sign> = (0..len)
            .map(|i| if i % 2 == 0 { first } else { first.flip() })
            .collect();
        let tail = prefix.last().copied().unwrap_or(first);
        SignSequence { prefix, tail }
    }

    /// Parses strings like `"+-+"` (tail repeats the last symbol) or
    /// `"+-+|-"` (explicit tail).
    pub fn parse(s: &str) -> Result<Self> {
        let (body, tail) = match s.split_once('|') {
            Some((b, t)) => (b, Some(t)),
            None => (s, None),
        };
        let prefix = body
            .chars()
            .map(|c| Sign::from_char(c).ok_or_else(|| Error::pre(format!("bad sign symbol {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let tail = match tail {
            Some(t) => {
                let mut it = t.chars();
                match (it.next().and_then(Sign::from_char), it.next()) {
                    (Some(s), None) => s,
                    _ => return Err(Error::pre(format!("bad tail {t:?}"))),
                }
            }
            None => *prefix
                .last()
                .ok_or_else(|| Error::pre("empty sign sequence"))?,
        };
        Ok(SignSequence { prefix, tail })
    }

    /// `ς(m)` for `m >= 1`.
    pub fn get(&self, m: usize) -> Sign {
        assert!(m >= 1, "sign sequences are indexed from 1");
        self.prefix.get(m - 1).copied().unwrap_or(self.tail)
    }

    pub fn flipped(&self) -> Self {
        SignSequence {
            prefix: self.prefix.iter().map(|s| s.flip()).collect(),
            tail: self.tail.flip(),
        }
    }

    /// Least `m` with `ς(m) != ς'(m)`, if any.
    pub fn first_difference(&self, other: &SignSequence) -> Option<usize> {
        let n = self.prefix.len().max(other.prefix.len());
        (1..=n)
            .find(|&m| self.get(m) != other.get(m))
            .or_else(|| (self.tail != other.tail).then_some(n + 1))
    }

    /// Whether `ς` is constant on `[a, b]`.
    pub fn constant_on(&self, a: usize, b: usize) -> bool {
        (a..=b).all(|m| self.get(m) == self.get(a))
    }
}

impl fmt::Display for SignSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.prefix {
            write!(f, "{}", s.as_char())?;
        }
        write!(f, "|{}", self.tail.as_char())
    }
}

/// Closed arc `[center - halfwidth, center + halfwidth]` of `R/Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleInterval {
    center: f64,
    halfwidth: f64,
}

impl CircleInterval {
    pub fn new(center: f64, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0 && halfwidth <= 0.5) || !center.is_finite() {
            return Err(Error::pre(format!(
                "interval needs finite center and half-width in (0, 1/2], got {center}, {halfwidth}"
            )));
        }
        Ok(CircleInterval {
            center: center.rem_euclid(1.0),
            halfwidth,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn length(&self) -> f64 {
        2.0 * self.halfwidth
    }

    /// Signed offset of `θ` from the center, in `[-1/2, 1/2)`.
    pub fn offset(&self, theta: f64) -> f64 {
        wrap(theta - self.center)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.offset(theta).abs() <= self.halfwidth
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpTerm {
    pub coefficient: f64,
    pub interval: CircleInterval,
}

/// `base + Σ coefficient · χ_I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePotential {
    pub base: f64,
    pub terms: Vec<BumpTerm>,
    pub truncation_level: usize,
}

impl CirclePotential {
    /// Value at `anchor + x`. Offsets to term centers equal to `anchor` are
    /// exact, so tiny intervals around the anchor are resolved at full
    /// precision.
    ///
    /// Evaluated as `top - Σ c (1 - χ)` with `top = base + Σ c`, which avoids
    /// cancellation between the base and the plateau values.
    pub fn eval_local(&self, anchor: f64, x: f64) -> f64 {
        let (top, rest) = self.eval_split(anchor, x);
        top + rest
    }

    /// `(top, -Σ c (1 - χ))`; the first part does not depend on `x`.
    pub fn eval_split(&self, anchor: f64, x: f64) -> (f64, f64) {
        let mut top = self.base;
        let mut deficit = 0.0;
        for t in &self.terms {
            top += t.coefficient;
            let off = wrap(wrap(anchor - t.interval.center) + x);
            let chi = master_bump(off / t.interval.halfwidth);
            deficit += t.coefficient * (1.0 - chi);
        }
        (top, -deficit)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_local(theta, 0.0)
    }

    pub fn shifted(&self, c: f64) -> Self {
        CirclePotential {
            base: self.base + c,
            ..self.clone()
        }
    }

    /// Bump edges and plateau edges, as offsets from `anchor`.
    fn local_breakpoints(&self, anchor: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(5 * self.terms.len());
        for t in &self.terms {
            let d = wrap(t.interval.center - anchor);
            let h = t.interval.halfwidth;
            out.extend([d - h, d - 2.0 * h / 3.0, d, d + 2.0 * h / 3.0, d + h]);
        }
        out
    }
}

/// `constant + Σ_n cos[n-1] cos(2πnθ) + sin[n-1] sin(2πnθ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// `(cos(q π/2 + y), sin(q π/2 + y))` for integer `q`, without rounding `π/2`.
fn quarter_rotate(q: i64, y: f64) -> (f64, f64) {
    let (s, c) = y.sin_cos();
    match q.rem_euclid(4) {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

/// `(cos 2π(p + y), sin 2π(p + y))`, exact in the quarter-turn part of `p`.
fn turn(p: f64, y: f64) -> (f64, f64) {
    let p = p.rem_euclid(1.0);
    let q = (4.0 * p).floor();
    let rest = p - q / 4.0;
    quarter_rotate(q as i64, 2.0 * PI * (rest + y))
}

impl TrigPolynomial {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        TrigPolynomial { constant, cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn coef(&self, n: usize) -> (f64, f64) {
        (
            self.cos.get(n - 1).copied().unwrap_or(0.0),
            self.sin.get(n - 1).copied().unwrap_or(0.0),
        )
    }

    /// `Σ |coefficients|` over the nonconstant part.
    pub fn scale(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.scale() == 0.0
    }

    /// `D^k U(θ)` for `k >= 0`.
    pub fn derivative(&self, k: u32, theta: f64) -> f64 {
        let mut s = if k == 0 { self.constant } else { 0.0 };
        for n in 1..=self.degree() {
            let (a, b) = self.coef(n);
            let w = (2.0 * PI * n as f64).powi(k as i32);
            let (c, si) = turn(n as f64 * theta.rem_euclid(1.0), 0.0);
            // Rotate by k quarter turns: D^k cos = w cos(x + kπ/2), D^k sin = w sin(x + kπ/2).
            let (ck, sk) = match k % 4 {
                0 => (c, si),
                1 => (-si, c),
                2 => (-c, -si),
                _ => (si, -c),
            };
            s += w * (a * ck + b * sk);
        }
        s
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.derivative(0, theta)
    }

    /// `U(anchor + x)` computed as `U(anchor) + Δ` with the increments in
    /// product form, so `Δ` keeps relative accuracy for small `x`.
    pub fn eval_local(&self, anchor: f64, x: f64) -> f64 {
        let (base, delta) = self.eval_split(anchor, x);
        base + delta
    }

    /// `(U(anchor), U(anchor + x) - U(anchor))`.
    pub fn eval_split(&self, anchor: f64, x: f64) -> (f64, f64) {
        let mut base = self.constant;
        let mut delta = 0.0;
        for n in 1..=self.degree() {
            let (a, b) = self.coef(n);
            let nf = n as f64;
            let p = nf * anchor;
            let (c0, s0) = turn(p, 0.0);
            base += a * c0 + b * s0;
            // cos(φ+ψ) - cos φ = -2 sin(φ+ψ/2) sin(ψ/2), sin(φ+ψ) - sin φ = 2 cos(φ+ψ/2) sin(ψ/2)
            let half = (PI * nf * x).sin();
            let (cm, sm) = turn(p, 0.5 * nf * x);
            delta += 2.0 * half * (-a * sm + b * cm);
        }
        (base, delta)
    }

    pub fn shifted(&self, c: f64) -> Self {
        TrigPolynomial {
            constant: self.constant + c,
            ..self.clone()
        }
    }
}

/// Potentials accepted by the marginal-density machinery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CircleFunction {
    Bumps(CirclePotential),
    Trig(TrigPolynomial),
}

impl From<CirclePotential> for CircleFunction {
    fn from(p: CirclePotential) -> Self {
        CircleFunction::Bumps(p)
    }
}

impl From<TrigPolynomial> for CircleFunction {
    fn from(p: TrigPolynomial) -> Self {
        CircleFunction::Trig(p)
    }
}

impl CircleFunction {
    pub fn eval_local(&self, anchor: f64, x: f64) -> f64 {
        match self {
            CircleFunction::Bumps(p) => p.eval_local(anchor, x),
            CircleFunction::Trig(p) => p.eval_local(anchor, x),
        }
    }

    /// Value at `anchor` and increment to `anchor + x`, kept apart so large
    /// values do not swamp the increment.
    pub fn eval_split(&self, anchor: f64, x: f64) -> (f64, f64) {
        match self {
            CircleFunction::Bumps(p) => p.eval_split(anchor, x),
            CircleFunction::Trig(p) => p.eval_split(anchor, x),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_local(theta, 0.0)
    }

    pub fn shifted(&self, c: f64) -> Self {
        match self {
            CircleFunction::Bumps(p) => CircleFunction::Bumps(p.shifted(c)),
            CircleFunction::Trig(p) => CircleFunction::Trig(p.shifted(c)),
        }
    }

    /// The additive constant (`base` or `constant`).
    pub fn constant(&self) -> f64 {
        match self {
            CircleFunction::Bumps(p) => p.base,
            CircleFunction::Trig(p) => p.constant,
        }
    }

    /// Relative accuracy to which `exp(β U)` can be evaluated away from the
    /// anchor. Bump increments are exact near their centres; trigonometric
    /// ones carry rounding of order `β · ε · Σ |coefficients|`.
    pub fn noise_floor(&self, beta: f64) -> f64 {
        match self {
            CircleFunction::Bumps(_) => 0.0,
            CircleFunction::Trig(p) => 8.0 * f64::EPSILON * beta * p.scale(),
        }
    }

    /// Same function with its additive constant set to zero.
    pub fn centered(&self) -> Self {
        self.shifted(-self.constant())
    }

    /// Points where the integrand changes character (bump and plateau edges,
    /// critical points), as sorted offsets from `anchor` inside `(lo, hi)`.
    pub fn local_breakpoints(&self, anchor: f64, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = match self {
            CircleFunction::Bumps(p) => p.local_breakpoints(anchor),
            CircleFunction::Trig(p) => super::laplace::critical_points(p)
                .into_iter()
                .map(|c| wrap(c - anchor))
                .collect(),
        };
        pts.push(0.0);
        let n = pts.len();
        for i in 0..n {
            pts.push(pts[i] - 1.0);
            pts.push(pts[i] + 1.0);
        }
        pts.retain(|&x| x > lo && x < hi);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }
}

/// `U(ς) = -level(0)^{-1} + Σ_{m=1}^{M} (level(m-1)^{-1} - level(m)^{-1}) χ_m^{ς(m)}`
/// with `χ_m^+ = χ_{I_{m-1}^+} + χ_{I_m^-}` and `χ_m^- = χ_{I_{m-1}^-} + χ_{I_m^+}`.
pub fn build_u(signs: &SignSequence, schedule: &Schedule, truncation: usize) -> Result<CirclePotential> {
    if truncation > schedule.m_max() {
        return Err(Error::Range(format!(
            "truncation {truncation} exceeds m_max {}",
            schedule.m_max()
        )));
    }
    let mut terms = Vec::with_capacity(2 * truncation);
    for m in 1..=truncation {
        let c = schedule.inverse_level(m - 1) - schedule.inverse_level(m);
        let s = signs.get(m);
        terms.push(BumpTerm {
            coefficient: c,
            interval: schedule.window(m - 1, s)?,
        });
        terms.push(BumpTerm {
            coefficient: c,
            interval: schedule.window(m, s.flip())?,
        });
    }
    Ok(CirclePotential {
        base: -schedule.inverse_level(0),
        terms,
        truncation_level: truncation,
    })
}

/// Upper bound on `‖U(ς) - U(ς')‖_{C^r}`:
/// `4 ‖χ‖_{C^r} Σ_{m > m₀} level(m-1)^{-1} hw(m)^{-r}`, where `m₀` is the
/// length of the common prefix.
///
/// For the analytic schedule the series runs to infinity (summed in the log
/// domain with a geometric tail bound); for desk schedules it runs to
/// `m_max`, the truncation of the potentials.
pub fn family_modulus(a: &SignSequence, b: &SignSequence, r: usize, schedule: &Schedule) -> Result<LogScalar> {
    let Some(first) = a.first_difference(b) else {
        return Ok(LogScalar::ZERO);
    };
    let m0 = first - 1;
    let log2_term = |m: usize| -> f64 {
        let (lvl, hw) = match schedule.kind() {
            super::ScheduleKind::Analytic => {
                let lvl = if m - 1 == 0 { 1000.0 } else { ((m + 9) as f64).powi(3) };
                (lvl, -((m + 11) as f64).powi(2))
            }
            super::ScheduleKind::Desk => (schedule.level_log2(m - 1), schedule.halfwidth_log2(m)),
        };
        -lvl - r as f64 * hw
    };
    let ln2 = std::f64::consts::LN_2;
    let mut terms = Vec::new();
    match schedule.kind() {
        super::ScheduleKind::Desk => {
            for m in m0 + 1..=schedule.m_max() {
                terms.push(LogScalar::from_ln(log2_term(m) * ln2));
            }
        }
        super::ScheduleKind::Analytic => {
            // Exponents -(m+9)^3 + r (m+11)^2 eventually decrease by more than
            // one per step; sum until that holds and the terms are negligible,
            // then bound the rest by a geometric series of ratio 1/2.
            let mut m = m0 + 1;
            loop {
                let t = log2_term(m);
                terms.push(LogScalar::from_ln(t * ln2));
                let next = log2_term(m + 1);
                let decaying = (m + 1..m + 4).all(|j| log2_term(j + 1) - log2_term(j) <= -1.0);
                if decaying && m > m0 + 40 {
                    terms.push(LogScalar::from_ln((next + 1.0) * ln2));
                    break;
                }
                m += 1;
                if m > m0 + 10_000 {
                    return Err(Error::Convergence {
                        iterations: m,
                        residual: t,
                    });
                }
            }
        }
    }
    let sum = LogScalar::sum(terms);
    Ok(sum * LogScalar::from_value(4.0 * master_bump_cr_norm(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_xy::schedule::{default_desk_halfwidths, Schedule};

    fn desk() -> Schedule {
        Schedule::desk(&default_desk_halfwidths(3), &[1.0, 8.0, 64.0, 512.0]).unwrap()
    }

    #[test]
    fn wrap_is_exact_near_zero() {
        assert_eq!(wrap(1e-30), 1e-30);
        assert_eq!(wrap(0.75), -0.25);
        assert_eq!(wrap(-0.5), -0.5);
        assert_eq!(wrap(0.5), -0.5);
    }

    #[test]
    fn telescoping_at_center() {
        let s = desk();
        let u = build_u(&SignSequence::constant(Sign::Plus), &s, 3).unwrap();
        assert!((u.eval(0.0) + 1.0 / 512.0).abs() < 1e-15);
        assert!((u.eval(0.25) + 1.0).abs() < 1e-15);
        for i in 0..2000 {
            let t = i as f64 / 2000.0;
            let v = u.eval(t);
            assert!(v <= 1e-15 && v >= -1.0 - 1e-15);
        }
    }

    #[test]
    fn bump_transplant() {
        let iv = CircleInterval::new(0.3, 0.03).unwrap();
        assert_eq!(super::super::bump_on_interval(&iv, 0.3), 1.0);
        assert_eq!(super::super::bump_on_interval(&iv, 0.3 + 0.01), 1.0);
        assert_eq!(super::super::bump_on_interval(&iv, 0.9), 0.0);
    }

    #[test]
    fn sign_sequence_basics() {
        let s = SignSequence::parse("+-+").unwrap();
        assert_eq!(s.get(1), Sign::Plus);
        assert_eq!(s.get(2), Sign::Minus);
        assert_eq!(s.get(10), Sign::Plus);
        let t = SignSequence::parse("+-|-").unwrap();
        assert_eq!(s.first_difference(&t), Some(3));
        assert_eq!(s.first_difference(&s), None);
        assert_eq!(s.to_string(), "+-+|+");
    }

    #[test]
    fn modulus_vanishes_on_identical_sequences() {
        let s = SignSequence::constant(Sign::Plus);
        assert!(family_modulus(&s, &s, 0, &desk()).unwrap().is_zero());
    }

    #[test]
    fn analytic_modulus_matches_its_series() {
        let a = SignSequence::constant(Sign::Plus);
        let b = SignSequence::new(vec![Sign::Plus], Sign::Minus);
        let v = family_modulus(&a, &b, 0, &Schedule::analytic(3)).unwrap();
        // 4 Σ_{m≥2} 2^{-(m+9)^3}: dominated by 4 · 2^{-1331}.
        let expected = 2f64.ln() * (2.0 - 1331.0) + (1.0 + 2f64.powi(1331 - 1728)).ln();
        assert!((v.ln() - expected).abs() < 1e-12);
    }

    #[test]
    fn modulus_dominates_sampled_difference() {
        let s = desk();
        let a = SignSequence::parse("++-").unwrap();
        let b = SignSequence::parse("+-+").unwrap();
        let ua = build_u(&a, &s, 3).unwrap();
        let ub = build_u(&b, &s, 3).unwrap();
        let bound = family_modulus(&a, &b, 0, &s).unwrap().value();
        let sup = (0..10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|t| (ua.eval(t) - ub.eval(t)).abs())
            .fold(0.0, f64::max);
        assert!(sup <= bound && sup > 0.0);
    }

    #[test]
    fn trig_local_evaluation_agrees() {
        let p = TrigPolynomial::new(0.3, vec![3.0, 10.0, -3.0], vec![0.5]);
        for &(a, x) in &[(0.0, 0.01), (0.5, -0.003), (0.25, 0.2), (0.37, 0.05)] {
            assert!((p.eval_local(a, x) - p.eval(a + x)).abs() < 1e-12);
        }
        // Derivative against a central difference.
        let h = 1e-5;
        let fd = (p.eval(0.1 + h) - p.eval(0.1 - h)) / (2.0 * h);
        assert!((fd - p.derivative(1, 0.1)).abs() < 1e-5);
    }
}
