use super::ladder::Ladder;
use super::potential::CombinedPotential;
use super::sft::{all_words, Sft, Word};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub max_value: f64,
    /// Least rotations of the primitive words whose orbits attain the maximum.
    pub maximizers: Vec<Word>,
    /// Every primitive orbit (least rotation) with its average.
    pub orbits: Vec<(Word, f64)>,
}

fn least_rotation(w: &[u8]) -> Word {
    (0..w.len())
        .map(|i| [&w[i..], &w[..i]].concat())
        .min()
        .unwrap_or_default()
}

fn is_primitive(w: &[u8]) -> bool {
    let n = w.len();
    (1..n).filter(|d| n % d == 0).all(|d| w[d..] != w[..n - d])
}

/// Orbit averages `(1/p) Σ_{i<p} φ(σ^i x)` over all periodic points of period
/// at most `max_period`, each evaluated on a prefix long enough to resolve
/// every distance term. Returns the maximizing orbits (ties within `1e-12`
/// relative to the scale of `φ`).
pub fn maximizing_orbit_check(phi: &CombinedPotential, max_period: usize) -> Result<OrbitReport> {
    if max_period == 0 {
        return Err(Error::pre("period bound must be at least 1"));
    }
    let longest_order = phi
        .terms
        .iter()
        .flat_map(|(_, t)| t.targets.iter().map(|s| s.order()))
        .max()
        .unwrap_or(1);
    let resolve = 2 * max_period + longest_order + 2;
    let mut orbits: Vec<(Word, f64)> = Vec::new();
    for p in 1..=max_period {
        for w in all_words(p, phi.alphabet) {
            if !is_primitive(&w) || least_rotation(&w) != w {
                continue;
            }
            let x: Word = w.iter().cycle().take(resolve + p).copied().collect();
            let avg = (0..p).map(|i| phi.eval(&x[i..i + resolve])).sum::<f64>() / p as f64;
            orbits.push((w, avg));
        }
    }
    let max_value = orbits.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
    let scale = phi.constant.abs() + phi.terms.iter().map(|t| t.0.abs()).sum::<f64>();
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let maximizers = orbits
        .iter()
        .filter(|o| o.1 >= max_value - tie)
        .map(|o| o.0.clone())
        .collect();
    Ok(OrbitReport {
        max_value,
        maximizers,
        orbits,
    })
}

/// `X_m^+ = {0̄}` and `X_m^- = {1̄}` at every level, so every `Y_m^±` is the
/// pair of fixed points.
pub fn fixed_point_ladder(m_max: usize) -> Result<Ladder> {
    let zeros = Sft::new(2, vec![vec![1]])?;
    let ones = zeros.flipped()?;
    Ok(Ladder {
        plus: vec![zeros; m_max + 1],
        minus: vec![ones; m_max + 1],
        entropy_plus: vec![0.0; m_max + 1],
        entropy_minus: vec![0.0; m_max + 1],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEntropy {
    pub alpha: f64,
    pub entropy: f64,
}

fn binary_entropy(a: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(a) + term(1.0 - a)
}

/// Entropy of the marginal on `n`-cylinders of `α δ_{0̄} + (1 - α) δ_{1̄}`:
/// two atoms `0^n`, `1^n`, so `H(α)`.
pub fn marginal_entropy(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::pre("need n >= 1 and alpha in [0, 1]"));
    }
    Ok(binary_entropy(alpha))
}

/// Maximizer of [`marginal_entropy`] over `α`, by bisection on the sign of
/// `H'(α) = ln((1 - α)/α)`.
pub fn marginal_entropy_argmax(n: usize) -> Result<MarginalEntropy> {
    if n == 0 {
        return Err(Error::pre("need n >= 1"));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut alpha = 0.5;
    for _ in 0..200 {
        alpha = 0.5 * (lo + hi);
        let d = ((1.0 - alpha) / alpha).ln();
        if d == 0.0 {
            break;
        }
        if d > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
    }
    Ok(MarginalEntropy {
        alpha,
        entropy: marginal_entropy(n, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::potential::DistancePotential;
    use crate::symbolic::sft::Sft;

    #[test]
    fn argmax_is_one_half() {
        let r = marginal_entropy_argmax(3).unwrap();
        assert_eq!(r.alpha, 0.5);
        assert_eq!(r.entropy, 2f64.ln());
        assert_eq!(marginal_entropy(3, 0.0).unwrap(), 0.0);
        assert_eq!(marginal_entropy(3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cylinder_indicator_has_unique_maximizer() {
        // 1_[0] = 1 - dist(x, {0^∞}) on the first symbol: 1 + χ with χ ∈ {0, -1}
        // at depth 1; the fixed point 0^∞ is the only orbit with average 1.
        let zeros = Sft::new(2, vec![vec![1]]).unwrap();
        let phi = CombinedPotential {
            alphabet: 2,
            constant: 1.0,
            terms: vec![(1.0, DistancePotential::new(vec![zeros]))],
        };
        let r = maximizing_orbit_check(&phi, 6).unwrap();
        assert_eq!(r.maximizers, vec![vec![0]]);
        assert_eq!(r.max_value, 1.0);
    }

    #[test]
    fn fixed_point_targets_have_two_maximizers() {
        use crate::circle_xy::{Sign, SignSequence};
        use crate::symbolic::potential::build_phi;
        let l = fixed_point_ladder(3).unwrap();
        let phi = build_phi(&SignSequence::alternating(Sign::Plus, 3), &[1.0, 0.5, 0.25], &l, 3).unwrap();
        let r = maximizing_orbit_check(&phi, 8).unwrap();
        assert_eq!(r.maximizers, vec![vec![0], vec![1]]);
        assert_eq!(r.max_value, 1.75 / 8.0);
    }

    #[test]
    fn zero_potential_ties_everywhere() {
        let phi = CombinedPotential {
            alphabet: 2,
            constant: 0.0,
            terms: vec![],
        };
        let r = maximizing_orbit_check(&phi, 4).unwrap();
        assert_eq!(r.maximizers.len(), r.orbits.len());
    }

    #[test]
    fn primitive_necklaces() {
        let phi = CombinedPotential {
            alphabet: 2,
            constant: 0.0,
            terms: vec![],
        };
        // Binary primitive necklaces of length 1..=4: 2 + 1 + 2 + 3.
        assert_eq!(maximizing_orbit_check(&phi, 4).unwrap().orbits.len(), 8);
    }
}
