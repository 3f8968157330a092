//! Log-domain integration of `exp(f)` over arcs of the circle `R/Z`.
//!
//! Each panel is integrated with a pair of nested Gauss–Legendre rules
//! (10 and 20 nodes); subintervals whose two estimates disagree are bisected,
//! largest error first. The integrand is shifted by its sampled panel maximum
//! so that `exp` never overflows.

use super::LogScalar;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::sync::OnceLock;

const LOW_ORDER: usize = 10;
const HIGH_ORDER: usize = 20;
const SAMPLES_PER_PANEL: usize = 33;
/// The initial mesh is graded geometrically toward both panel ends down to
/// relative size `2^-GRADING_DEPTH`, so peaks sitting on a breakpoint are
/// never hidden between quadrature nodes.
const GRADING_DEPTH: i32 = 30;
const MAX_SUBINTERVALS: usize = 40_000;
/// Re-shift threshold: values of `f - shift` above this trigger a restart.
const SHIFT_HEADROOM: f64 = 600.0;

/// Ordered breakpoints on one full turn of the circle.
///
/// The panels are `[b_i, b_{i+1}]` for consecutive breakpoints plus the
/// wrap-around panel `[b_last, b_0 + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelPartition {
    breakpoints: Vec<f64>,
    tolerance: f64,
}

impl PanelPartition {
    /// Breakpoints are reduced mod 1, sorted and deduplicated.
    pub fn new(points: impl IntoIterator<Item = f64>, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::pre(format!("tolerance must lie in (0,1), got {tolerance}")));
        }
        let mut breakpoints: Vec<f64> = points
            .into_iter()
            .map(|p| {
                if !p.is_finite() {
                    return Err(Error::pre(format!("non-finite breakpoint {p}")));
                }
                Ok(p.rem_euclid(1.0))
            })
            .collect::<Result<_>>()?;
        breakpoints.sort_by(|a, b| a.total_cmp(b));
        breakpoints.dedup();
        if breakpoints.len() > 1 && breakpoints[breakpoints.len() - 1] == 1.0 {
            breakpoints.pop();
        }
        Ok(PanelPartition {
            breakpoints,
            tolerance,
        })
    }

    /// A single panel starting at 0.
    pub fn uniform(tolerance: f64) -> Result<Self> {
        Self::new([0.0], tolerance)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Panel endpoints unrolled onto the real line: `b_0 < ... < b_last < b_0 + 1`.
    pub fn unrolled(&self) -> Vec<f64> {
        let mut pts = self.breakpoints.clone();
        if let Some(&first) = self.breakpoints.first() {
            pts.push(first + 1.0);
        }
        pts
    }
}

/// `log ∫_T exp(f) dθ` with relative error at most `partition.tolerance()`.
pub fn log_integrate_exp<F>(f: F, partition: &PanelPartition) -> Result<LogScalar>
where
    F: Fn(f64) -> f64,
{
    if partition.breakpoints.is_empty() {
        return Err(Error::pre("empty panel partition"));
    }
    log_integrate_exp_over(&f, &partition.unrolled(), partition.tolerance)
}

/// `log ∫_{p_0}^{p_n} exp(f)` where `points` are increasing panel endpoints on
/// the real line (no wrap-around is applied; `f` is responsible for
/// periodicity).
pub fn log_integrate_exp_over<F>(f: &F, points: &[f64], tolerance: f64) -> Result<LogScalar>
where
    F: Fn(f64) -> f64,
{
    if points.len() < 2 {
        return Err(Error::pre("need at least two panel endpoints"));
    }
    let mut panels = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b >= a) {
            return Err(Error::pre(format!("panel endpoints not increasing: {a} > {b}")));
        }
        if b > a {
            panels.push(Panel::new(f, a, b)?);
        }
    }
    // Error budget: panel p may contribute an absolute error of
    // (tol/2) * max(Z_p, Z/n), which sums to at most tol * Z. Panels that are
    // negligible against the total are therefore not refined to full
    // relative accuracy.
    let n = panels.len() as f64;
    let log_total = LogScalar::sum(panels.iter().map(Panel::value)).ln();
    for panel in &mut panels {
        let lp = panel.value().ln();
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let rel = 0.5 * tolerance * (log_total - lp - n.ln()).exp().max(1.0);
        panel.refine(f, rel)?;
    }
    Ok(LogScalar::sum(panels.iter().map(Panel::value)))
}

fn eval_checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::Evaluation { at: x, value: v });
    }
    Ok(v)
}

struct Piece {
    a: f64,
    b: f64,
    estimate: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive state of one panel: pieces of `exp(f - shift)` keyed by their
/// error estimates.
struct Panel {
    a: f64,
    b: f64,
    shift: f64,
    pieces: BinaryHeap<Piece>,
    total: f64,
    error: f64,
    bisections: usize,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Self> {
        let mut shift = f64::NEG_INFINITY;
        for i in 0..SAMPLES_PER_PANEL {
            let x = a + (b - a) * (i as f64) / ((SAMPLES_PER_PANEL - 1) as f64);
            shift = shift.max(eval_checked(f, x)?);
        }
        if shift == f64::NEG_INFINITY {
            shift = 0.0;
        }
        let mut panel = Panel {
            a,
            b,
            shift,
            pieces: BinaryHeap::new(),
            total: 0.0,
            error: 0.0,
            bisections: 0,
        };
        panel.seed(f)?;
        Ok(panel)
    }

    /// Restarts on the graded mesh, re-shifting as often as needed.
    fn seed<F: Fn(f64) -> f64>(&mut self, f: &F) -> Result<()> {
        'restart: loop {
            self.pieces.clear();
            self.total = 0.0;
            self.error = 0.0;
            let cuts = graded_mesh(self.a, self.b);
            for w in cuts.windows(2) {
                match rule_pair(f, w[0], w[1], self.shift)? {
                    Ok(p) => self.push(p),
                    Err(s) => {
                        self.shift = s;
                        continue 'restart;
                    }
                }
            }
            return Ok(());
        }
    }

    fn push(&mut self, p: Piece) {
        self.total += p.estimate;
        self.error += p.error;
        self.pieces.push(p);
    }

    fn resum(&mut self) {
        self.total = self.pieces.iter().map(|p| p.estimate).sum();
        self.error = self.pieces.iter().map(|p| p.error).sum();
    }

    fn value(&self) -> LogScalar {
        LogScalar::from_ln(self.shift + self.total.ln())
    }

    fn refine<F: Fn(f64) -> f64>(&mut self, f: &F, rel: f64) -> Result<()> {
        while self.error > rel * self.total && self.error > f64::MIN_POSITIVE {
            let Some(worst) = self.pieces.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                // Cannot bisect further in floating point; accept the piece.
                self.pieces.push(Piece { error: 0.0, ..worst });
                self.resum();
                continue;
            }
            self.total -= worst.estimate;
            self.error -= worst.error;
            let mut fresh = Vec::with_capacity(2);
            for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
                match rule_pair(f, lo, hi, self.shift)? {
                    Ok(p) => fresh.push(p),
                    Err(s) => {
                        self.shift = s;
                        self.seed(f)?;
                        fresh.clear();
                        break;
                    }
                }
            }
            for p in fresh {
                self.push(p);
            }
            self.bisections += 1;
            if self.bisections > MAX_SUBINTERVALS {
                return Err(Error::Convergence {
                    iterations: self.bisections,
                    residual: self.error / self.total.abs().max(f64::MIN_POSITIVE),
                });
            }
            if self.bisections % 256 == 0 {
                // Guard against drift in the running sums.
                self.resum();
            }
        }
        self.resum();
        Ok(())
    }
}

fn graded_mesh(a: f64, b: f64) -> Vec<f64> {
    let half = 0.5 * (b - a);
    let mut pts = vec![a];
    for j in (1..=GRADING_DEPTH).rev() {
        pts.push(a + half * 2f64.powi(-j));
    }
    pts.push(a + half);
    for j in 1..=GRADING_DEPTH {
        pts.push(b - half * 2f64.powi(-j));
    }
    pts.push(b);
    pts.dedup_by(|x, y| !(*x > *y));
    pts
}

/// Applies both rules; returns `Err(new_shift)` if the integrand exceeds the
/// current shift by more than the headroom.
fn rule_pair<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    shift: f64,
) -> Result<std::result::Result<Piece, f64>> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut out = [0.0; 2];
    for (slot, rule) in [gauss_legendre(LOW_ORDER), gauss_legendre(HIGH_ORDER)]
        .into_iter()
        .enumerate()
    {
        let mut s = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = eval_checked(f, c + r * x)?;
            if v - shift > SHIFT_HEADROOM {
                return Ok(Err(v));
            }
            s += w * (v - shift).exp();
        }
        out[slot] = s * r;
    }
    Ok(Ok(Piece {
        a,
        b,
        estimate: out[1],
        error: (out[1] - out[0]).abs(),
    }))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Cached rule of the given order (computed once by Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static LOW: OnceLock<GaussRule> = OnceLock::new();
    static HIGH: OnceLock<GaussRule> = OnceLock::new();
    match n {
        LOW_ORDER => LOW.get_or_init(|| compute_rule(LOW_ORDER)),
        HIGH_ORDER => HIGH.get_or_init(|| compute_rule(HIGH_ORDER)),
        _ => Box::leak(Box::new(compute_rule(n))),
    }
}

fn compute_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Independent series oracle: I0(x) = Σ (x/2)^{2k} / (k!)^2.
    fn bessel_i0_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let q = x * x / 4.0;
        for k in 1..200 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x18: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(18))
            .sum();
        assert!((x18 - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn zero_integrand_gives_log_one() {
        let p = PanelPartition::uniform(1e-12).unwrap();
        let z = log_integrate_exp(|_| 0.0, &p).unwrap();
        assert!(z.ln().abs() < 1e-14);
    }

    #[test]
    fn constant_integrand_shifts_out() {
        let p = PanelPartition::new([0.1, 0.7], 1e-12).unwrap();
        let z = log_integrate_exp(|_| 2.5, &p).unwrap();
        assert!((z.ln() - 2.5).abs() < 1e-13);
        let z = log_integrate_exp(|_| 1.0e5, &p).unwrap();
        assert!((z.ln() - 1.0e5).abs() < 1e-9);
    }

    #[test]
    fn cosine_matches_bessel_series() {
        let p = PanelPartition::new([0.0, 0.5], 1e-13).unwrap();
        let z = log_integrate_exp(|t| 10.0 * (2.0 * PI * t).cos(), &p).unwrap();
        let oracle = bessel_i0_series(10.0).ln();
        assert!((z.ln() - oracle).abs() < 1e-8, "{} vs {}", z.ln(), oracle);
    }

    #[test]
    fn sharp_peak_far_from_samples_is_found() {
        // Peak sits inside a panel, far from any breakpoint.
        let beta = 1.0e6;
        let p = PanelPartition::new([0.0], 1e-10).unwrap();
        let z = log_integrate_exp(|t| beta * ((2.0 * PI * (t - 0.3)).cos() - 1.0), &p).unwrap();
        // Laplace: sqrt(2π / (β (2π)^2)) with relative correction O(1/β).
        let laplace = (2.0 * PI / (beta * 4.0 * PI * PI)).sqrt().ln();
        assert!((z.ln() - laplace).abs() < 1e-5, "{} vs {}", z.ln(), laplace);
    }

    #[test]
    fn very_narrow_peak_on_a_breakpoint() {
        let beta = 1.0e10;
        let p = PanelPartition::new([0.0, 0.25, 0.5, 0.75], 1e-10).unwrap();
        let z = log_integrate_exp(|t| -2.0 * beta * (PI * (t - 0.5)).sin().powi(2), &p).unwrap();
        let laplace = (2.0 * PI / (beta * 4.0 * PI * PI)).sqrt().ln();
        assert!((z.ln() - laplace).abs() < 1e-8, "{} vs {}", z.ln(), laplace);
    }

    #[test]
    fn empty_partition_is_rejected() {
        let p = PanelPartition::new(Vec::<f64>::new(), 1e-8).unwrap();
        assert!(matches!(log_integrate_exp(|_| 0.0, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn non_finite_values_are_reported() {
        let p = PanelPartition::uniform(1e-8).unwrap();
        let r = log_integrate_exp(|t| if t > 0.5 { f64::NAN } else { 0.0 }, &p);
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }
}
