use super::equilibrium::{clopen_mass, equilibrium_state, u_minus, u_plus};
use super::ladder::Ladder;
use super::potential::{build_phi, truncate_depth, CombinedPotential};
use crate::circle_xy::{Sign, SignSequence};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default bound on `β · lip_bound · 2^{-k}` accepted by verification.
pub const RESOLUTION_THRESHOLD: f64 = 1e-3;
/// Largest truncation depth on the binary alphabet.
pub const MAX_DEPTH: usize = 14;

/// Target deficit `δ(m)`: a level is calibrated to mass `≥ 1 - δ(m)` and
/// verified at `≥ 1 - 2δ(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaProfile {
    /// `δ = 1/6`: calibrated mass `5/6`, verified mass `2/3`.
    Primed,
    /// `δ(m) = 2^{-(m+1)}`: verified mass `1 - 2^{-m}`.
    Full,
    /// The same `δ` at every level.
    Constant(f64),
}

impl DeltaProfile {
    pub fn delta(self, m: usize) -> f64 {
        match self {
            DeltaProfile::Primed => 1.0 / 6.0,
            DeltaProfile::Full => 0.5f64.powi(m as i32 + 1),
            DeltaProfile::Constant(d) => d,
        }
    }

    pub fn required(self, m: usize) -> f64 {
        1.0 - 2.0 * self.delta(m)
    }
}

/// `eps[m - 1] = ε(m)`, `beta[m - 1] = β(m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBetaSchedule {
    pub eps: Vec<f64>,
    pub beta: Vec<f64>,
}

impl EpsilonBetaSchedule {
    pub fn new(eps: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let s = EpsilonBetaSchedule { eps, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn levels(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.len() != self.beta.len() || self.eps.is_empty() {
            return Err(Error::pre("schedule needs one ε and one β per level"));
        }
        if self.eps.iter().chain(&self.beta).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::pre("schedule values must be finite and positive"));
        }
        if self.eps.windows(2).any(|w| w[1] > w[0] / 2.0) {
            return Err(Error::pre("need ε(m+1) <= ε(m)/2"));
        }
        if self.beta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::pre("β must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    /// Truncation depth used during the searches.
    pub depth: usize,
    pub beta_start: f64,
    pub max_doublings: usize,
    /// Bisection stops once `hi / lo <= 1 + bisection_rel`.
    pub bisection_rel: f64,
    pub max_halvings: usize,
    /// Points of the geometric β-grid used for the ε searches.
    pub grid_points: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            depth: 10,
            beta_start: 1.0,
            max_doublings: 60,
            bisection_rel: 0.02,
            max_halvings: 60,
            grid_points: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub m: usize,
    pub beta: f64,
    /// Smallest mass of `U^{ς(m)}` at `β(m)` over all sign prefixes of length `m`.
    pub min_mass: f64,
    pub target: f64,
    pub doublings: usize,
    /// `ε(m + 1)` and the largest mass shift it causes on the grid below `β(m)`.
    pub eps_next: Option<f64>,
    pub worst_shift: Option<f64>,
    pub halvings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub schedule: EpsilonBetaSchedule,
    pub profile: DeltaProfile,
    pub options: CalibrationOptions,
    pub levels: Vec<LevelReport>,
    /// The ε searches only check a finite β-grid.
    pub validation: String,
}

/// `β · lip · 2^{-k}`.
pub fn truncation_budget(beta: f64, lip: f64, k: usize) -> f64 {
    beta * lip * 0.5f64.powi(k as i32)
}

/// Smallest `k <= MAX_DEPTH` with `β · lip · 2^{-k} <= RESOLUTION_THRESHOLD`,
/// or `MAX_DEPTH` when none is.
pub fn policy_depth(beta: f64, lip: f64) -> usize {
    (2..=MAX_DEPTH)
        .find(|&k| truncation_budget(beta, lip, k) <= RESOLUTION_THRESHOLD)
        .unwrap_or(MAX_DEPTH)
}

fn phase_words(sign: Sign) -> Vec<Vec<u8>> {
    match sign {
        Sign::Plus => u_plus(),
        Sign::Minus => u_minus(),
    }
}

/// Equilibrium mass of `U^{sign}` for `β φ` truncated at depth `k`.
pub fn phase_mass(phi: &CombinedPotential, beta: f64, k: usize, sign: Sign) -> Result<f64> {
    let t = truncate_depth(phi, k)?;
    let mu = equilibrium_state(&t, beta)?;
    clopen_mass(&mu, &phase_words(sign))
}

/// All sign sequences whose first `len` signs vary and whose tail repeats
/// the last one.
pub fn sign_prefixes(len: usize) -> Vec<SignSequence> {
    (0..1usize << len)
        .map(|bits| {
            let prefix: Vec<Sign> = (0..len)
                .map(|i| if bits >> (len - 1 - i) & 1 == 0 { Sign::Plus } else { Sign::Minus })
                .collect();
            let tail = *prefix.last().unwrap_or(&Sign::Plus);
            SignSequence::new(prefix, tail)
        })
        .collect()
}

/// `n` geometrically spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 || a == b {
        return vec![b];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

struct Search<'a> {
    ladder: &'a Ladder,
    depth: usize,
}

impl Search<'_> {
    fn min_mass(&self, prefixes: &[SignSequence], eps: &[f64], m: usize, beta: f64) -> Result<f64> {
        let masses = prefixes
            .par_iter()
            .map(|s| {
                let phi = build_phi(s, eps, self.ladder, m)?;
                phase_mass(&phi, beta, self.depth, s.get(m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(masses.into_iter().fold(1.0, f64::min))
    }

    /// Mass of `U^+` for every (prefix, β) pair.
    fn plus_masses(&self, prefixes: &[SignSequence], eps: &[f64], m: usize, grid: &[f64]) -> Result<Vec<f64>> {
        let cells: Vec<(&SignSequence, f64)> = prefixes.iter().flat_map(|s| grid.iter().map(move |&b| (s, b))).collect();
        cells
            .par_iter()
            .map(|&(s, beta)| {
                let phi = build_phi(s, eps, self.ladder, m)?;
                phase_mass(&phi, beta, self.depth, Sign::Plus)
            })
            .collect()
    }
}

/// Inductive search for `(ε(m), β(m))`, `m = 1..=M`, with `ε(1) = 1`.
///
/// `β(m)` is the end of a doubling-then-bisection search for the smallest β
/// at which every sign prefix of length `m` puts mass `>= 1 - δ(m)` on
/// `U^{ς(m)}`. `ε(m+1)` starts at `ε(m)/2` and is halved until adding level
/// `m + 1` with either sign moves the mass of `U^+` by less than
/// `δ(j) 2^{j-m-1}` on a geometric grid over `[β(j-1), β(j)]` for every
/// `j <= m` (`[β(1)/2, β(1)]` for `j = 1`). The shifts of all later levels
/// then sum to less than `δ(j)` on those grids.
pub fn calibrate(ladder: &Ladder, m_max: usize, profile: DeltaProfile, opts: &CalibrationOptions) -> Result<Calibration> {
    if m_max == 0 || m_max > ladder.depth() {
        return Err(Error::pre(format!(
            "need 1 <= M <= {} levels, got {m_max}",
            ladder.depth()
        )));
    }
    if opts.depth < 3 || opts.depth > MAX_DEPTH {
        return Err(Error::pre(format!("search depth must be in 3..={MAX_DEPTH}")));
    }
    if !(opts.beta_start > 0.0 && opts.bisection_rel > 0.0) {
        return Err(Error::pre("beta_start and bisection_rel must be positive"));
    }
    let search = Search { ladder, depth: opts.depth };
    let mut eps = vec![1.0];
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    let mut levels = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let prefixes = sign_prefixes(m);
        let target = 1.0 - profile.delta(m);
        let floor = beta.last().copied().unwrap_or(0.0);
        let mut lo = floor;
        let mut hi = floor.max(opts.beta_start) * 2.0;
        let mut doublings = 0;
        let mut mass = search.min_mass(&prefixes, &eps, m, hi)?;
        while mass < target {
            doublings += 1;
            if doublings > opts.max_doublings {
                let gap = ladder.entropy_plus[m - 1] - ladder.entropy_minus[m];
                return Err(Error::Calibration(format!(
                    "level {m}: mass {mass:.6} < {target:.6} at β = {hi:e} after {} doublings \
                     (entropy gap {gap:.4}, search depth {})",
                    opts.max_doublings, opts.depth
                )));
            }
            lo = hi;
            hi *= 2.0;
            mass = search.min_mass(&prefixes, &eps, m, hi)?;
        }
        while hi > lo * (1.0 + opts.bisection_rel) {
            let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
            let mm = search.min_mass(&prefixes, &eps, m, mid)?;
            if mm >= target {
                hi = mid;
                mass = mm;
            } else {
                lo = mid;
            }
            if lo == 0.0 && hi < opts.beta_start * 1e-6 {
                break;
            }
        }
        beta.push(hi);
        let mut report = LevelReport {
            m,
            beta: hi,
            min_mass: mass,
            target,
            doublings,
            eps_next: None,
            worst_shift: None,
            halvings: 0,
        };
        if m < m_max {
            // Level m + 1 may move the mass on the grid of level j by at most
            // δ(j) 2^{j-m-1}, so the whole tail stays below δ(j).
            let grids: Vec<Vec<f64>> = (1..=m)
                .map(|j| {
                    let low = if j == 1 { beta[0] / 2.0 } else { beta[j - 2] };
                    log_grid(low, beta[j - 1], opts.grid_points)
                })
                .collect();
            let flat: Vec<f64> = grids.concat();
            let budgets: Vec<f64> = (1..=m)
                .flat_map(|j| {
                    let b = profile.delta(j) * 0.5f64.powi((m + 1 - j) as i32);
                    std::iter::repeat(b).take(grids[j - 1].len())
                })
                .collect();
            let base = search.plus_masses(&prefixes, &eps, m, &flat)?;
            let extended = sign_prefixes(m + 1);
            let g = flat.len();
            let mut candidate = eps[m - 1] / 2.0;
            let mut halvings = 0;
            loop {
                let mut trial = eps.clone();
                trial.push(candidate);
                let shifted = search.plus_masses(&extended, &trial, m + 1, &flat)?;
                // extended[2i] and extended[2i + 1] share prefixes[i].
                let (worst, ratio) = shifted.iter().enumerate().fold((0.0f64, 0.0f64), |(w, r), (idx, &x)| {
                    let d = (x - base[(idx / g / 2) * g + idx % g]).abs();
                    (w.max(d), r.max(d / budgets[idx % g]))
                });
                if ratio < 1.0 {
                    report.eps_next = Some(candidate);
                    report.worst_shift = Some(worst);
                    report.halvings = halvings;
                    eps.push(candidate);
                    break;
                }
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(Error::Calibration(format!(
                        "level {}: mass shift {worst:.6} over budget with ε = {candidate:e} after {} halvings",
                        m + 1,
                        opts.max_halvings
                    )));
                }
                candidate /= 2.0;
            }
        }
        levels.push(report);
    }
    Ok(Calibration {
        schedule: EpsilonBetaSchedule::new(eps, beta)?,
        profile,
        options: opts.clone(),
        levels,
        validation: "grid-validated".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicMargin {
    pub beta: f64,
    pub mass: f64,
    pub required: f64,
    pub margin: f64,
    pub depth: usize,
    pub truncation_budget: f64,
    pub holds: bool,
}

/// Equilibrium mass of `U^{ς(m)}` for `β φ(ς)` (all schedule levels) at each
/// grid point, against `1 - 2δ(m)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_symbolic_statement(
    signs: &SignSequence,
    m: usize,
    m_hat: usize,
    grid: &[f64],
    schedule: &EpsilonBetaSchedule,
    ladder: &Ladder,
    profile: DeltaProfile,
    depth: usize,
    resolution: f64,
) -> Result<Vec<SymbolicMargin>> {
    schedule.validate()?;
    let levels = schedule.levels();
    if !(1 <= m && m <= m_hat && m_hat <= levels) {
        return Err(Error::pre(format!("need 1 <= m <= m̂ <= {levels}, got m = {m}, m̂ = {m_hat}")));
    }
    if !signs.constant_on(m, m_hat) {
        return Err(Error::pre(format!("ς is not constant on [{m}, {m_hat}]")));
    }
    let (lo, hi) = (schedule.beta[m - 1], schedule.beta[m_hat - 1]);
    let slack = 1e-12 * hi;
    if grid.is_empty() || grid.iter().any(|&b| !(b >= lo - slack && b <= hi + slack)) {
        return Err(Error::pre(format!("grid must be nonempty and inside [{lo:e}, {hi:e}]")));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::pre(format!("depth must be in 1..={MAX_DEPTH}")));
    }
    let phi = build_phi(signs, &schedule.eps, ladder, levels)?;
    let lip = phi.lip_bound();
    if let Some(&b) = grid.iter().find(|&&b| truncation_budget(b, lip, depth) > resolution) {
        return Err(Error::Depth(format!(
            "β·lip·2^-k = {:.3e} exceeds {resolution:e} at β = {b:e}, k = {depth}; raise k",
            truncation_budget(b, lip, depth)
        )));
    }
    let table = truncate_depth(&phi, depth)?;
    let required = profile.required(m);
    let sign = signs.get(m);
    grid.par_iter()
        .map(|&beta| {
            let mu = equilibrium_state(&table, beta)?;
            let mass = clopen_mass(&mu, &phase_words(sign))?;
            Ok(SymbolicMargin {
                beta,
                mass,
                required,
                margin: mass - required,
                depth,
                truncation_budget: truncation_budget(beta, lip, depth),
                holds: mass >= required,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::ladder::{entropy_ladder, LadderSpec};

    #[test]
    fn profiles() {
        assert!((DeltaProfile::Primed.required(3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(DeltaProfile::Full.required(1), 0.5);
        assert_eq!(DeltaProfile::Full.required(3), 0.875);
    }

    #[test]
    fn prefixes_enumerate_all_patterns() {
        let p = sign_prefixes(3);
        assert_eq!(p.len(), 8);
        assert_eq!(p[0].to_string(), "+++|+");
        assert_eq!(p[5].to_string(), "-+-|-");
    }

    #[test]
    fn zero_beta_is_symmetric() {
        let l = entropy_ladder(&LadderSpec::standard(), 1).unwrap();
        for s in sign_prefixes(1) {
            let phi = build_phi(&s, &[1.0], &l, 1).unwrap();
            let m = phase_mass(&phi, 0.0, 6, s.get(1)).unwrap();
            assert!((m - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn one_level_calibration() {
        let l = entropy_ladder(&LadderSpec::standard(), 1).unwrap();
        let c = calibrate(&l, 1, DeltaProfile::Primed, &CalibrationOptions::default()).unwrap();
        assert!(c.schedule.beta[0] > 0.0);
        assert!(c.levels[0].min_mass >= 5.0 / 6.0);
    }

    #[test]
    fn schedule_rejects_slow_decay() {
        assert!(EpsilonBetaSchedule::new(vec![1.0, 0.6], vec![1.0, 2.0]).is_err());
        assert!(EpsilonBetaSchedule::new(vec![1.0, 0.5], vec![2.0, 2.0]).is_err());
        assert!(EpsilonBetaSchedule::new(vec![1.0, 0.5], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn policy_depth_caps() {
        assert_eq!(policy_depth(1.0, 1.0), 10);
        assert_eq!(policy_depth(1e6, 1.0), MAX_DEPTH);
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = log_grid(3.0, 48.0, 5);
        assert_eq!(g[0], 3.0);
        assert_eq!(g[4], 48.0);
        assert!((g[2] - 12.0).abs() < 1e-12);
    }
}
