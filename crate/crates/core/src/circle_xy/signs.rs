use super::potential::{Sign, SignSequence};
use super::schedule::Schedule;
use crate::{Error, Result};

/// Largest `m` in `1..=m_max` with `level(m) <= β`, if any.
fn cell(beta: f64, schedule: &Schedule) -> Option<usize> {
    (1..=schedule.m_max()).rev().find(|&m| schedule.level(m) <= beta)
}

/// Sign sequence that follows `ς₀` on `1..=m₀` and then alternates in blocks
/// `[m(ℓ), m(ℓ+1) - 1]`, `+` for even `ℓ` and `-` for odd `ℓ`, where `m(ℓ)` is
/// the largest `m` with `level(m) <= β̂_ℓ` (indices start at `ℓ = 0`).
///
/// An entry whose closed cell `[level(m), level(m+1)]` touches the cell of the
/// previously kept entry is dropped, so every kept entry starts a block of its
/// own. The sign of the first block also covers `m₀ + 1 .. m(0) - 1`, and the
/// sign of the last block is the tail.
pub fn schedule_signs(
    beta_hat: &[f64],
    initial: &SignSequence,
    m0: usize,
    schedule: &Schedule,
) -> Result<SignSequence> {
    if beta_hat.is_empty() {
        return Err(Error::pre("empty list of inverse temperatures"));
    }
    if beta_hat.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::pre("inverse temperatures must be strictly increasing"));
    }
    if m0 + 1 > schedule.m_max() || beta_hat[0] < schedule.level(m0 + 1) {
        return Err(Error::pre(format!(
            "first inverse temperature must be at least level({})",
            m0 + 1
        )));
    }
    let cells = |m: usize, beta: f64| -> (usize, usize) {
        if beta == schedule.level(m) && m >= 1 {
            (m - 1, m)
        } else {
            (m, m)
        }
    };
    let mut kept: Vec<usize> = Vec::new();
    let mut last_cells: Option<(usize, usize)> = None;
    for &b in beta_hat {
        let m = cell(b, schedule).expect("beta at least level(1)");
        let c = cells(m, b);
        if let Some((lo, hi)) = last_cells {
            if c.0 <= hi && lo <= c.1 {
                continue;
            }
        }
        last_cells = Some(c);
        kept.push(m);
    }
    let block_sign = |l: usize| if l % 2 == 0 { Sign::Plus } else { Sign::Minus };
    let last = *kept.last().expect("at least one entry is kept");
    let mut prefix: Vec<Sign> = (1..=m0).map(|m| initial.get(m)).collect();
    for m in m0 + 1..=last {
        let l = kept.iter().rposition(|&start| start <= m).unwrap_or(0);
        prefix.push(block_sign(l));
    }
    Ok(SignSequence::new(prefix, block_sign(kept.len() - 1)))
}
