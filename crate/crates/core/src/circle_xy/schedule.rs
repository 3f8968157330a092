use super::{CircleInterval, Sign};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Analytic,
    Desk,
}

/// Half-widths of `I_m^+` and plateau depths `level(m)` (the inverse of
/// `β_m`), both stored as base-2 logarithms.
///
/// For the analytic schedule the logarithms are the exact integers
/// `-(m+11)^2` and `(m+10)^3` (with `level(0) = 2^{1000}`). Half-widths are
/// stored for `m = 0..=m_max + 1`, levels for `m = 0..=m_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    kind: ScheduleKind,
    m_max: usize,
    halfwidth_log2: Vec<f64>,
    level_log2: Vec<f64>,
}

/// `2^{-(m+2)^2}`: the desk default, giving `I_{m-1}` the half-width
/// `2^{-(m+1)^2}` of the analytic phase windows.
pub fn default_desk_halfwidths(m_max: usize) -> Vec<f64> {
    (0..=m_max + 1)
        .map(|m| 2f64.powi(-(((m + 2) * (m + 2)) as i32)))
        .collect()
}

/// `2^{-(m+offset)}`.
pub fn geometric_halfwidths(m_max: usize, offset: i32) -> Vec<f64> {
    (0..=m_max + 1).map(|m| 2f64.powi(-(m as i32 + offset))).collect()
}

impl Schedule {
    pub fn analytic(m_max: usize) -> Self {
        let halfwidth_log2 = (0..=m_max + 1)
            .map(|m| -(((m + 11) * (m + 11)) as f64))
            .collect();
        let level_log2 = (0..=m_max)
            .map(|m| if m == 0 { 1000.0 } else { ((m + 10) * (m + 10) * (m + 10)) as f64 })
            .collect();
        Schedule {
            kind: ScheduleKind::Analytic,
            m_max,
            halfwidth_log2,
            level_log2,
        }
    }

    /// Desk schedule from explicit half-widths (`m_max + 2` values) and levels
    /// (`m_max + 1` values).
    pub fn desk(halfwidths: &[f64], levels: &[f64]) -> Result<Self> {
        if levels.is_empty() || halfwidths.len() != levels.len() + 1 {
            return Err(Error::pre(format!(
                "need one more half-width than levels, got {} and {}",
                halfwidths.len(),
                levels.len()
            )));
        }
        let s = Schedule {
            kind: ScheduleKind::Desk,
            m_max: levels.len() - 1,
            halfwidth_log2: halfwidths.iter().map(|h| h.log2()).collect(),
            level_log2: levels.iter().map(|l| l.log2()).collect(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.halfwidth_log2.len() != self.m_max + 2 || self.level_log2.len() != self.m_max + 1 {
            return Err(Error::pre("schedule tables have inconsistent lengths"));
        }
        if self.halfwidth_log2.iter().chain(&self.level_log2).any(|v| !v.is_finite()) {
            return Err(Error::pre("half-widths and levels must be positive and finite"));
        }
        if !(self.halfwidth_log2[0] < -3.0) {
            return Err(Error::pre("halfwidth(0) must be below 1/8"));
        }
        if self.halfwidth_log2.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::pre("half-widths must be strictly decreasing"));
        }
        if self.level_log2.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::pre("levels must be strictly increasing"));
        }
        Ok(())
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn halfwidth_log2(&self, m: usize) -> f64 {
        self.halfwidth_log2[m]
    }

    pub fn level_log2(&self, m: usize) -> f64 {
        self.level_log2[m]
    }

    pub fn halfwidth(&self, m: usize) -> f64 {
        self.halfwidth_log2[m].exp2()
    }

    /// `level(m)`; infinite for analytic levels beyond `f64` range.
    pub fn level(&self, m: usize) -> f64 {
        self.level_log2[m].exp2()
    }

    /// `1 / level(m)`; may underflow to zero for the analytic schedule.
    pub fn inverse_level(&self, m: usize) -> f64 {
        (-self.level_log2[m]).exp2()
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..=self.m_max).map(|m| self.level(m)).collect()
    }

    pub fn halfwidths(&self) -> Vec<f64> {
        (0..=self.m_max + 1).map(|m| self.halfwidth(m)).collect()
    }

    /// Same schedule cut down to `m_max = m`.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m > self.m_max {
            return Err(Error::Range(format!("cannot truncate at {m} > m_max {}", self.m_max)));
        }
        Ok(Schedule {
            kind: self.kind,
            m_max: m,
            halfwidth_log2: self.halfwidth_log2[..m + 2].to_vec(),
            level_log2: self.level_log2[..m + 1].to_vec(),
        })
    }

    /// `I_m^sign`.
    pub fn window(&self, m: usize, sign: Sign) -> Result<CircleInterval> {
        if m > self.m_max + 1 {
            return Err(Error::Range(format!("level {m} beyond schedule")));
        }
        CircleInterval::new(sign.center(), self.halfwidth(m))
    }
}

/// Two arcs `inner <= |θ - center| <= outer`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: f64,
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn contains(&self, theta: f64) -> bool {
        let d = super::wrap(theta - self.center).abs();
        self.inner <= d && d <= self.outer
    }

    /// Lebesgue measure.
    pub fn length(&self) -> f64 {
        2.0 * (self.outer - self.inner)
    }

    /// Every point of the annulus lies in `iv` (concentric or antipodal `iv`).
    pub fn inside(&self, iv: &CircleInterval) -> bool {
        let d = super::wrap(iv.center() - self.center).abs();
        if d == 0.0 {
            self.outer <= iv.halfwidth()
        } else {
            false
        }
    }

    /// No point of the annulus lies in `iv`.
    pub fn disjoint(&self, iv: &CircleInterval) -> bool {
        let d = super::wrap(iv.center() - self.center).abs();
        if d == 0.0 {
            self.inner > iv.halfwidth()
        } else {
            // Arcs occupy distances [inner, outer] from the center, the
            // interval [d - h, d + h].
            self.outer < d - iv.halfwidth() || self.inner > d + iv.halfwidth()
        }
    }
}

/// `I_m^±`, and for `m >= 1` the sets `Y_m^±` and `M_m^±`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSystem {
    pub m: usize,
    pub i_plus: CircleInterval,
    pub i_minus: CircleInterval,
    /// `Y_m^+ = I_{m-1}^+ ∪ I_m^-`.
    pub y_plus: Option<[CircleInterval; 2]>,
    /// `Y_m^- = I_{m-1}^- ∪ I_m^+`.
    pub y_minus: Option<[CircleInterval; 2]>,
    pub m_plus: Option<Annulus>,
    pub m_minus: Option<Annulus>,
}

impl IntervalSystem {
    pub fn y(&self, sign: Sign) -> Option<[CircleInterval; 2]> {
        match sign {
            Sign::Plus => self.y_plus,
            Sign::Minus => self.y_minus,
        }
    }

    pub fn m_set(&self, sign: Sign) -> Option<Annulus> {
        match sign {
            Sign::Plus => self.m_plus,
            Sign::Minus => self.m_minus,
        }
    }
}

/// Radii of `M_m^+`: `[hw(m-1)/3, 2 hw(m-1)/3]` when `hw(m) < hw(m-1)/3`;
/// otherwise the inner radius moves to the midpoint of `hw(m)` and
/// `2 hw(m-1)/3` so that `M_m` stays clear of `I_m`.
fn m_radii(schedule: &Schedule, m: usize) -> (f64, f64) {
    let outer_scale = schedule.halfwidth(m - 1);
    let outer = 2.0 * outer_scale / 3.0;
    let hw = schedule.halfwidth(m);
    let inner = if hw < outer_scale / 3.0 {
        outer_scale / 3.0
    } else {
        0.5 * (hw + outer)
    };
    (inner, outer)
}

pub fn interval_system(m: usize, schedule: &Schedule) -> Result<IntervalSystem> {
    if m > schedule.m_max() {
        return Err(Error::Range(format!(
            "level {m} outside 0..={}",
            schedule.m_max()
        )));
    }
    let i_plus = schedule.window(m, Sign::Plus)?;
    let i_minus = schedule.window(m, Sign::Minus)?;
    let (y_plus, y_minus, m_plus, m_minus) = if m >= 1 {
        let (inner, outer) = m_radii(schedule, m);
        (
            Some([schedule.window(m - 1, Sign::Plus)?, i_minus]),
            Some([schedule.window(m - 1, Sign::Minus)?, i_plus]),
            Some(Annulus {
                center: 0.0,
                inner,
                outer,
            }),
            Some(Annulus {
                center: 0.5,
                inner,
                outer,
            }),
        )
    } else {
        (None, None, None, None)
    };
    Ok(IntervalSystem {
        m,
        i_plus,
        i_minus,
        y_plus,
        y_minus,
        m_plus,
        m_minus,
    })
}

/// Checks `M_m^ς ⊂ Y_m^ς ∖ (Y_{m+1}^+ ∪ Y_{m+1}^-)` for both signs by
/// endpoint comparison. Needs `1 <= m <= m_max - 1`, or `m = m_max` using
/// the stored half-width of level `m_max + 1`.
pub fn m_set_inclusion_holds(m: usize, schedule: &Schedule) -> Result<bool> {
    if m == 0 || m > schedule.m_max() {
        return Err(Error::Range(format!("M-sets need 1 <= m <= m_max, got {m}")));
    }
    let here = interval_system(m, schedule)?;
    let next_y = |sign: Sign| -> Result<[CircleInterval; 2]> {
        Ok([
            schedule.window(m, sign)?,
            schedule.window(m + 1, sign.flip())?,
        ])
    };
    let mut ok = true;
    for sign in [Sign::Plus, Sign::Minus] {
        let ann = here.m_set(sign).expect("m >= 1");
        let y = here.y(sign).expect("m >= 1");
        ok &= y.iter().any(|iv| ann.inside(iv));
        for s in [Sign::Plus, Sign::Minus] {
            ok &= next_y(s)?.iter().all(|iv| ann.disjoint(iv));
        }
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_windows() {
        let s = Schedule::analytic(5);
        let sys = interval_system(0, &s).unwrap();
        assert_eq!(sys.i_plus.halfwidth(), 2f64.powi(-121));
        assert_eq!(sys.i_minus.center(), 0.5);
        assert_eq!(s.level_log2(0), 1000.0);
        assert_eq!(s.level_log2(1), 1331.0);
        assert!(m_set_inclusion_holds(1, &s).unwrap());
        assert!(m_set_inclusion_holds(5, &s).unwrap());
    }

    #[test]
    fn geometric_desk_example() {
        let hw = geometric_halfwidths(3, 4);
        let s = Schedule::desk(&hw, &[1.0, 10.0, 100.0, 1000.0]).unwrap();
        assert!(m_set_inclusion_holds(1, &s).unwrap());
        let sys = interval_system(1, &s).unwrap();
        let ann = sys.m_plus.unwrap();
        assert!(ann.inner > s.halfwidth(1));
        assert!(ann.outer <= s.halfwidth(0));
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(Schedule::desk(&[0.2, 0.1], &[1.0]).is_err());
        assert!(Schedule::desk(&[0.1, 0.1], &[1.0]).is_err());
        assert!(Schedule::desk(&[0.1, 0.05, 0.01], &[2.0, 1.0]).is_err());
        assert!(interval_system(4, &Schedule::analytic(3)).is_err());
    }
}
