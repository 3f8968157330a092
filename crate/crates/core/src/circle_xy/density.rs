use super::potential::{build_u, wrap, CircleFunction, CircleInterval, SignSequence};
use super::schedule::{Schedule, ScheduleKind};
use crate::numerics::{log_integrate_exp_over, LogScalar, PanelPartition};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Default relative tolerance of every partition-function quadrature.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// The marginal `exp(β U) / Z` of the Gibbs measure on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalDensity {
    pub potential: CircleFunction,
    pub beta: f64,
    pub log_z: LogScalar,
    /// Partition function of `U` minus its constant part. Masses are ratios
    /// against this one, so they do not depend on the constant at all.
    pub centered_log_z: LogScalar,
    pub partition: PanelPartition,
}

/// `log ∫_{a+lo}^{a+hi} exp(β U)`, with `hi - lo <= 1`.
///
/// The arc is cut where it crosses `1/4 + Z/2`; each piece is integrated in
/// local coordinates around whichever of 0 and 1/2 it is closest to, so
/// bumps centred there are resolved at full precision however narrow.
fn log_mass_arc(u: &CircleFunction, beta: f64, a: f64, lo: f64, hi: f64, tol: f64) -> Result<LogScalar> {
    if !(hi - lo <= 1.0 + 1e-15) || !(hi >= lo) {
        return Err(Error::pre(format!("arc [{lo}, {hi}] is not within one turn")));
    }
    if hi == lo {
        return Ok(LogScalar::ZERO);
    }
    let tol = tol.max(u.noise_floor(beta));
    let mut cuts = vec![lo];
    let mut x = lo + (0.25 - a - lo).rem_euclid(0.5);
    while x < hi {
        if x > lo {
            cuts.push(x);
        }
        x += 0.5;
    }
    cuts.push(hi);
    let mut parts = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let mid = 0.5 * (x0 + x1);
        let home = if wrap(a + mid).abs() <= 0.25 { 0.0 } else { 0.5 };
        let mut s = wrap(a - home);
        if s + mid > 0.5 {
            s -= 1.0;
        } else if s + mid < -0.5 {
            s += 1.0;
        }
        let (l0, l1) = (s + x0, s + x1);
        let mut points = vec![l0];
        points.extend(u.local_breakpoints(home, l0, l1));
        points.push(l1);
        let level = beta * u.eval_split(home, 0.0).0;
        let f = |y: f64| beta * u.eval_split(home, y).1;
        parts.push(log_integrate_exp_over(&f, &points, tol)? * LogScalar::from_ln(level));
    }
    Ok(LogScalar::sum(parts))
}

/// Breakpoints of `u` on the circle, for reporting.
fn circle_breakpoints(u: &CircleFunction) -> Vec<f64> {
    let mut pts = Vec::new();
    for home in [0.0, 0.5] {
        pts.extend(u.local_breakpoints(home, -0.25, 0.25).into_iter().map(|x| home + x));
    }
    pts.extend([0.25, 0.75]);
    pts
}

pub fn marginal_density(u: impl Into<CircleFunction>, beta: f64) -> Result<MarginalDensity> {
    marginal_density_with(u, beta, DEFAULT_TOLERANCE)
}

pub fn marginal_density_with(u: impl Into<CircleFunction>, beta: f64, tolerance: f64) -> Result<MarginalDensity> {
    let u = u.into();
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::pre(format!("beta must be finite and >= 0, got {beta}")));
    }
    let partition = PanelPartition::new(circle_breakpoints(&u), tolerance)?;
    let centered_log_z = log_mass_arc(&u.centered(), beta, 0.0, -0.5, 0.5, tolerance)?;
    let log_z = centered_log_z * LogScalar::from_ln(beta * u.constant());
    Ok(MarginalDensity {
        potential: u,
        beta,
        log_z,
        centered_log_z,
        partition,
    })
}

impl MarginalDensity {
    /// `log(exp(β U(θ)) / Z)`.
    pub fn log_density(&self, theta: f64) -> f64 {
        self.beta * self.potential.eval(theta) - self.log_z.ln()
    }

    /// Mass of the arc `[center + lo, center + hi]`.
    pub fn arc_mass(&self, center: f64, lo: f64, hi: f64) -> Result<f64> {
        let lm = log_mass_arc(
            &self.potential.centered(),
            self.beta,
            center,
            lo,
            hi,
            self.partition.tolerance(),
        )?;
        Ok((lm / self.centered_log_z).value().clamp(0.0, 1.0))
    }

    /// CSV with columns `theta,log_density` on `n` equally spaced points.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("theta,log_density\n");
        for i in 0..n {
            let t = i as f64 / n as f64;
            let _ = writeln!(out, "{},{}", t, self.log_density(t));
        }
        out
    }
}

pub fn interval_mass(d: &MarginalDensity, interval: &CircleInterval) -> Result<f64> {
    let h = interval.halfwidth();
    d.arc_mass(interval.center(), -h, h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyVerdict {
    pub holds: bool,
    pub achieved: f64,
    pub required: f64,
}

/// Mass of the phase window `I_{m-1}^{ς(m)}` under `U(ς)` truncated at
/// `m_max`, compared with `1 - 2^{-m}`. No conditions on `β`.
pub fn window_mass(signs: &SignSequence, m: usize, beta: f64, schedule: &Schedule) -> Result<XyVerdict> {
    if m == 0 || m > schedule.m_max() {
        return Err(Error::Range(format!("m = {m} outside 1..={}", schedule.m_max())));
    }
    let u = build_u(signs, schedule, schedule.m_max())?;
    let d = marginal_density(u, beta)?;
    let achieved = interval_mass(&d, &schedule.window(m - 1, signs.get(m))?)?;
    let required = 1.0 - 0.5f64.powi(m as i32);
    Ok(XyVerdict {
        holds: achieved >= required,
        achieved,
        required,
    })
}

/// `window_mass` under the hypotheses of the statement: `1 <= m <= m̂`,
/// `ς` constant on `[m, m̂]` and `level(m) <= β <= level(m̂)`.
pub fn verify_xy_statement(
    signs: &SignSequence,
    m: usize,
    m_hat: usize,
    beta: f64,
    schedule: &Schedule,
) -> Result<XyVerdict> {
    if schedule.kind() == ScheduleKind::Analytic {
        return Err(Error::Range(
            "analytic levels are not representable; use a desk schedule".into(),
        ));
    }
    if m == 0 || m_hat < m || m_hat > schedule.m_max() {
        return Err(Error::pre(format!(
            "need 1 <= m <= m_hat <= {}, got m = {m}, m_hat = {m_hat}",
            schedule.m_max()
        )));
    }
    if !signs.constant_on(m, m_hat) {
        return Err(Error::pre(format!("signs not constant on [{m}, {m_hat}]")));
    }
    let (lo, hi) = (schedule.level(m), schedule.level(m_hat));
    if !(beta >= lo * (1.0 - 1e-12) && beta <= hi * (1.0 + 1e-12)) {
        return Err(Error::pre(format!("beta {beta} outside [{lo}, {hi}]")));
    }
    window_mass(signs, m, beta, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_xy::potential::{Sign, TrigPolynomial};
    use crate::circle_xy::schedule::default_desk_halfwidths;

    fn cosine(a: f64) -> TrigPolynomial {
        TrigPolynomial::new(0.0, vec![a], vec![])
    }

    #[test]
    fn uniform_at_zero_beta() {
        let d = marginal_density(cosine(1.0), 0.0).unwrap();
        assert!(d.log_z.ln().abs() < 1e-14);
        let iv = CircleInterval::new(0.3, 0.125).unwrap();
        assert!((interval_mass(&d, &iv).unwrap() - 0.25).abs() < 1e-13);
    }

    #[test]
    fn bessel_partition_function() {
        // log I_0(10) from the power series Σ (25)^k / (k!)^2.
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..200 {
            term *= 25.0 / (k as f64 * k as f64);
            sum += term;
        }
        let d = marginal_density(cosine(1.0), 10.0).unwrap();
        assert!((d.log_z.ln() - sum.ln()).abs() < 1e-12);
    }

    #[test]
    fn window_mass_against_reference_quadrature() {
        let d = marginal_density(cosine(1.0), 5.0).unwrap();
        let got = interval_mass(&d, &CircleInterval::new(0.0, 0.05).unwrap()).unwrap();
        // Composite Simpson with many nodes as an independent reference.
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let f = |t: f64| (5.0 * (2.0 * std::f64::consts::PI * t).cos()).exp();
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let want = simpson(-0.05, 0.05, 20_000) / simpson(-0.5, 0.5, 200_000);
        assert!((got - want).abs() < 1e-8);
    }

    #[test]
    fn normalization_and_shift_invariance() {
        let s = Schedule::desk(&default_desk_halfwidths(2), &[1.0, 64.0, 4096.0]).unwrap();
        let u = build_u(&SignSequence::parse("+-").unwrap(), &s, 2).unwrap();
        let d = marginal_density(u.clone(), 4096.0).unwrap();
        let d2 = marginal_density(u.shifted(0.37), 4096.0).unwrap();
        let full = CircleInterval::new(0.0, 0.5).unwrap();
        assert!((interval_mass(&d, &full).unwrap() - 1.0).abs() < 1e-10);
        for iv in [s.window(1, Sign::Minus).unwrap(), s.window(0, Sign::Plus).unwrap()] {
            let a = interval_mass(&d, &iv).unwrap();
            let b = interval_mass(&d2, &iv).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn additivity_of_disjoint_windows() {
        let d = marginal_density(cosine(2.0), 3.0).unwrap();
        let i = CircleInterval::new(0.1, 0.05).unwrap();
        let j = CircleInterval::new(0.2, 0.05).unwrap();
        let ij = CircleInterval::new(0.15, 0.1).unwrap();
        let sum = interval_mass(&d, &i).unwrap() + interval_mass(&d, &j).unwrap();
        assert!((sum - interval_mass(&d, &ij).unwrap()).abs() < 2e-12);
    }

    #[test]
    fn zero_beta_fails_the_statement() {
        let s = Schedule::desk(&default_desk_halfwidths(1), &[1.0, 64.0]).unwrap();
        let v = window_mass(&SignSequence::constant(Sign::Plus), 1, 0.0, &s).unwrap();
        assert!(!v.holds);
        assert!((v.achieved - s.window(0, Sign::Plus).unwrap().length()).abs() < 1e-14);
        assert!(verify_xy_statement(&SignSequence::constant(Sign::Plus), 1, 1, 0.0, &s).is_err());
        assert!(verify_xy_statement(&SignSequence::constant(Sign::Plus), 1, 1, 1.0, &Schedule::analytic(2)).is_err());
    }
}
