use super::potential::{wrap, TrigPolynomial};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest derivative order examined at a maximizer.
pub const MAX_ORDER: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceAtom {
    pub atom: f64,
    pub weight: f64,
    pub order: u32,
    pub omega: f64,
}

fn sample_count(p: &TrigPolynomial) -> usize {
    2000.max(200 * p.degree())
}

/// Bisection for a sign change of `g` on `[a, b]`.
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Zeros of `D^k U` at which it changes sign, located by dense sampling and
/// bisection. `falling` restricts to `+ → -` changes.
fn sign_changes(p: &TrigPolynomial, k: u32, falling: bool) -> Vec<f64> {
    let n = sample_count(p);
    let g = |t: f64| p.derivative(k, t);
    let vals: Vec<f64> = (0..=n).map(|i| g(i as f64 / n as f64)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        let t0 = i as f64 / n as f64;
        let t1 = (i + 1) as f64 / n as f64;
        let hit = if falling {
            a > 0.0 && b <= 0.0
        } else {
            (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)
        };
        if hit {
            let r = if b == 0.0 { t1 } else { bisect(g, t0, t1) };
            out.push(r.rem_euclid(1.0));
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup_by(|a, b| wrap(*a - *b).abs() < 1e-12);
    out
}

/// Points where `U′` changes sign (local extrema), in `[0, 1)`.
pub fn critical_points(p: &TrigPolynomial) -> Vec<f64> {
    if p.is_constant() {
        return Vec::new();
    }
    sign_changes(p, 1, false)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Vanishing threshold for `D^ℓ U`, relative to the natural scale
/// `(2πN)^ℓ Σ|coef|`.
fn threshold(p: &TrigPolynomial, order: u32) -> f64 {
    1e-6 * (2.0 * std::f64::consts::PI * p.degree() as f64).powi(order as i32) * p.scale()
}

/// Order and refined location of a maximizer near `c`: the first `ℓ` with
/// `D^ℓ U` non-vanishing, after locating the zero of `D^{ℓ-1} U` next to `c`.
fn order_at(p: &TrigPolynomial, c: f64) -> Result<(u32, f64)> {
    let h = 1.0 / sample_count(p) as f64;
    for l in 2..=MAX_ORDER {
        let g = |t: f64| p.derivative(l - 1, t);
        let (a, b) = (c - h, c + h);
        let loc = if l == 2 || (g(a) > 0.0) == (g(b) > 0.0) {
            c
        } else {
            bisect(g, a, b)
        };
        if p.derivative(l, loc).abs() > threshold(p, l) {
            if l % 2 == 1 {
                return Err(Error::Resolution(format!(
                    "odd vanishing order {l} at a maximizer near {c}"
                )));
            }
            return Ok((l, loc.rem_euclid(1.0)));
        }
    }
    Err(Error::Resolution(format!(
        "all derivatives up to order {MAX_ORDER} vanish near {c}"
    )))
}

/// Zero-temperature limit of `exp(β U)/Z` for a trigonometric polynomial:
/// atoms at the maximizers of highest vanishing order `ℓ_max`, weighted
/// proportionally to `ω(c)^{-1/ℓ_max}` with `ω(c) = -D^ℓ U(c) / ℓ!`.
pub fn laplace_limit(p: &TrigPolynomial) -> Result<Vec<LaplaceAtom>> {
    if p.is_constant() {
        return Err(Error::Degenerate(
            "constant potential: the limit is Lebesgue measure".into(),
        ));
    }
    let candidates = sign_changes(p, 1, true);
    let u_max = candidates
        .iter()
        .map(|&c| p.eval(c))
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-9 * p.scale();
    let mut found = Vec::new();
    for &c in &candidates {
        if p.eval(c) >= u_max - tie {
            let (order, loc) = order_at(p, c)?;
            let omega = -p.derivative(order, loc) / factorial(order);
            if !(omega > 0.0) {
                return Err(Error::Resolution(format!(
                    "non-negative leading derivative at maximizer {loc}"
                )));
            }
            found.push((loc, order, omega));
        }
    }
    let l_max = found.iter().map(|f| f.1).max().expect("a nonconstant polynomial has a maximum");
    found.retain(|f| f.1 == l_max);
    let total: f64 = found.iter().map(|f| f.2.powf(-1.0 / l_max as f64)).sum();
    Ok(found
        .into_iter()
        .map(|(atom, order, omega)| LaplaceAtom {
            atom,
            weight: omega.powf(-1.0 / l_max as f64) / total,
            order,
            omega,
        })
        .collect())
}
