//! The master bump `χ` and its transplants `χ_I`.

use super::CircleInterval;

/// Smooth step `S(t) = ψ(t) / (ψ(t) + ψ(1 - t))` with `ψ(t) = exp(-1/t)`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

/// Even smooth bump: 1 on `[-2/3, 2/3]`, 0 outside `(-1, 1)`, strictly
/// monotone on each shoulder.
pub fn master_bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 2.0 / 3.0 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        smooth_step(3.0 * (1.0 - a))
    }
}

/// `χ_I(c + x) = χ(2x / |I|)`.
pub fn bump_on_interval(interval: &CircleInterval, theta: f64) -> f64 {
    master_bump(interval.offset(theta) / interval.halfwidth())
}

/// `‖χ‖_{C^r} = max_{j ≤ r} sup |χ^{(j)}|`, estimated from Taylor jets on a
/// dense grid of the shoulder (the sup for `r = 0` is exactly 1).
pub fn master_bump_cr_norm(r: usize) -> f64 {
    if r == 0 {
        return 1.0;
    }
    const SAMPLES: usize = 20_000;
    let mut best: f64 = 1.0;
    for i in 1..SAMPLES {
        let t = i as f64 / SAMPLES as f64;
        let g = 1.0 / t - 1.0 / (1.0 - t);
        if g.abs() > 600.0 {
            continue;
        }
        let jet = step_jet(t, r);
        let mut fact = 1.0;
        for (j, c) in jet.iter().enumerate().skip(1) {
            fact *= j as f64;
            // dt/dx = ∓3 on the shoulders.
            best = best.max((c * fact).abs() * 3f64.powi(j as i32));
        }
    }
    best
}

/// Taylor coefficients of `S` at `t` up to order `r`.
fn step_jet(t: f64, r: usize) -> Vec<f64> {
    let n = r + 1;
    let mut var = vec![0.0; n];
    var[0] = t;
    if n > 1 {
        var[1] = 1.0;
    }
    let one_minus: Vec<f64> = var
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 { 1.0 - v } else { -v })
        .collect();
    let g: Vec<f64> = jet_recip(&var)
        .iter()
        .zip(jet_recip(&one_minus))
        .map(|(a, b)| a - b)
        .collect();
    let mut denom = jet_exp(&g);
    denom[0] += 1.0;
    jet_recip(&denom)
}

fn jet_recip(a: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; a.len()];
    b[0] = 1.0 / a[0];
    for k in 1..a.len() {
        let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
        b[k] = -s / a[0];
    }
    b
}

fn jet_exp(a: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; a.len()];
    e[0] = a[0].exp();
    for k in 1..a.len() {
        let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
        e[k] = s / k as f64;
    }
    e
}
