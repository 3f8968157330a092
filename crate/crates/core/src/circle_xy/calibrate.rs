use super::density::{interval_mass, marginal_density};
use super::potential::{build_u, Sign, SignSequence};
use super::schedule::Schedule;
use crate::{Error, Result};
use rayon::prelude::*;

/// Doublings allowed per level before giving up.
const MAX_DOUBLINGS: usize = 200;

/// Every sign prefix of length `m`.
fn prefixes(m: usize) -> Vec<SignSequence> {
    (0..1u64 << m)
        .map(|bits| {
            let prefix: Vec<Sign> = (0..m)
                .map(|i| if bits >> i & 1 == 0 { Sign::Plus } else { Sign::Minus })
                .collect();
            let tail = *prefix.last().unwrap_or(&Sign::Plus);
            SignSequence::new(prefix, tail)
        })
        .collect()
}

/// Smallest mass of `I_{m-1}^{ς(m)}` over all prefixes, with `U` truncated
/// at `m` and the candidate schedule's `β = level(m)`.
fn worst_mass(schedule: &Schedule, m: usize) -> Result<f64> {
    let beta = schedule.level(m);
    prefixes(m)
        .par_iter()
        .map(|s| {
            let u = build_u(s, schedule, m)?;
            let d = marginal_density(u, beta)?;
            interval_mass(&d, &schedule.window(m - 1, s.get(m))?)
        })
        .try_reduce(|| 1.0, |a, b| Ok(a.min(b)))
}

/// Desk schedule on the given half-widths (`m_max + 2` values): `level(0) = 1`
/// and, for each `m`, `level(m)` is the first of `2 level(m-1), 4 level(m-1),
/// ...` at which every sign prefix puts mass at least `1 - slack 2^{-m}` on its
/// phase window `I_{m-1}^{ς(m)}`.
pub fn calibrate_desk(halfwidths: &[f64], slack: f64) -> Result<Schedule> {
    if halfwidths.len() < 3 {
        return Err(Error::pre("need half-widths for at least m_max = 1"));
    }
    if !(slack > 0.0 && slack <= 1.0) {
        return Err(Error::pre(format!("slack must lie in (0, 1], got {slack}")));
    }
    let m_max = halfwidths.len() - 2;
    let mut levels = vec![1.0];
    for m in 1..=m_max {
        let required = 1.0 - slack * 0.5f64.powi(m as i32);
        let mut level = 2.0 * levels[m - 1];
        let mut worst = 0.0;
        let mut accepted = false;
        for _ in 0..MAX_DOUBLINGS {
            let mut trial = levels.clone();
            trial.push(level);
            let s = Schedule::desk(&halfwidths[..m + 2], &trial)?;
            worst = worst_mass(&s, m)?;
            if worst >= required {
                accepted = true;
                break;
            }
            level *= 2.0;
        }
        if !accepted {
            return Err(Error::Calibration(format!(
                "level {m}: best window mass {worst} below {required} after {MAX_DOUBLINGS} doublings"
            )));
        }
        levels.push(level);
    }
    Schedule::desk(halfwidths, &levels)
}
