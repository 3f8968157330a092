use super::ladder::Ladder;
use super::sft::{all_words, index_word, Extender, Sft};
use crate::circle_xy::{Sign, SignSequence};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Distance from a point with a given prefix to a closed set, as far as the
/// prefix determines it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distance {
    /// Exactly `2^{-j}`.
    Exact(usize),
    /// At most `2^{-n}`: the whole prefix extends into the set.
    AtMost(usize),
}

impl Distance {
    /// `2^{-j}`, or 0 for an unresolved distance.
    pub fn value(self) -> f64 {
        match self {
            Distance::Exact(j) => 0.5f64.powi(j as i32),
            Distance::AtMost(_) => 0.0,
        }
    }
}

fn distance_with(prefix: &[u8], extenders: &[Extender]) -> Distance {
    let j = extenders
        .iter()
        .map(|e| e.longest_prefix(prefix))
        .max()
        .unwrap_or(0);
    if j == prefix.len() && !extenders.is_empty() {
        Distance::AtMost(j)
    } else {
        Distance::Exact(j)
    }
}

/// `dist(x, Y)` for `x` starting with `prefix` and `Y` the union of `targets`,
/// under `d(x, y) = 2^{-min{n : x_n != y_n}}`.
pub fn dist_to_union(prefix: &[u8], targets: &[Sft]) -> Distance {
    let ex: Vec<Extender> = targets.iter().map(Sft::extender).collect();
    distance_with(prefix, &ex)
}

/// `χ_Y = -dist(·, Y)` for `Y` a finite union of SFTs. Lipschitz constant at
/// most 2 for the metric above.
#[derive(Clone, Debug)]
pub struct DistancePotential {
    pub targets: Vec<Sft>,
    extenders: Vec<Extender>,
}

impl DistancePotential {
    pub fn new(targets: Vec<Sft>) -> Self {
        let extenders = targets.iter().map(Sft::extender).collect();
        DistancePotential { targets, extenders }
    }

    pub fn distance(&self, prefix: &[u8]) -> Distance {
        distance_with(prefix, &self.extenders)
    }

    /// `-dist`, with unresolved distances taken as 0 (error at most
    /// `2^{-|prefix|}`).
    pub fn eval(&self, prefix: &[u8]) -> f64 {
        -self.distance(prefix).value()
    }

    pub const LIPSCHITZ: f64 = 2.0;
}

/// `constant + Σ weight · χ_{Y}`.
#[derive(Clone, Debug)]
pub struct CombinedPotential {
    pub alphabet: u8,
    pub constant: f64,
    pub terms: Vec<(f64, DistancePotential)>,
}

impl CombinedPotential {
    pub fn eval(&self, prefix: &[u8]) -> f64 {
        self.constant + self.terms.iter().map(|(w, t)| w * t.eval(prefix)).sum::<f64>()
    }

    /// `Σ |weight| · 2`.
    pub fn lip_bound(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w.abs() * DistancePotential::LIPSCHITZ).sum()
    }
}

/// `Y_m^+ = X_{m-1}^+ ∪ X_m^-`, `Y_m^- = X_{m-1}^- ∪ X_m^+`.
pub fn y_set(ladder: &Ladder, m: usize, sign: Sign) -> Vec<Sft> {
    let plus = sign == Sign::Plus;
    vec![ladder.member(m - 1, plus).clone(), ladder.member(m, !plus).clone()]
}

/// `φ = (1/8) Σ_{m=1}^{M} ε(m) (1 + χ_{Y_m^{ς(m)}})`.
pub fn build_phi(signs: &SignSequence, eps: &[f64], ladder: &Ladder, m_max: usize) -> Result<CombinedPotential> {
    if m_max > ladder.depth() {
        return Err(Error::pre(format!(
            "ladder has {} levels, need {m_max}",
            ladder.depth()
        )));
    }
    if eps.len() < m_max {
        return Err(Error::pre(format!("need {m_max} epsilon values, got {}", eps.len())));
    }
    let mut constant = 0.0;
    let mut terms = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let w = eps[m - 1] / 8.0;
        constant += w;
        terms.push((w, DistancePotential::new(y_set(ladder, m, signs.get(m)))));
    }
    Ok(CombinedPotential {
        alphabet: 2,
        constant,
        terms,
    })
}

/// A function of the first `depth` symbols, tabulated on `F^depth` in
/// index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocallyConstantPotential {
    pub alphabet: u8,
    pub depth: usize,
    pub table: Vec<f64>,
    pub lip_bound: f64,
    /// Uniform distance to the source potential.
    pub error_bound: f64,
}

impl LocallyConstantPotential {
    pub fn new(alphabet: u8, depth: usize, table: Vec<f64>) -> Result<Self> {
        if depth == 0 || table.len() != (alphabet as usize).pow(depth as u32) {
            return Err(Error::pre("table size must be alphabet^depth with depth >= 1"));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::pre("table values must be finite"));
        }
        Ok(LocallyConstantPotential {
            alphabet,
            depth,
            table,
            lip_bound: 0.0,
            error_bound: 0.0,
        })
    }

    pub fn value(&self, w: &[u8]) -> f64 {
        self.table[super::sft::word_index(&w[..self.depth], self.alphabet)]
    }

    /// Same function tabulated at a larger depth.
    pub fn deepen(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::pre("cannot tabulate at a smaller depth"));
        }
        let table = all_words(depth, self.alphabet).map(|w| self.value(&w)).collect();
        Ok(LocallyConstantPotential {
            depth,
            table,
            ..self.clone()
        })
    }

    pub fn shifted(&self, c: f64) -> Self {
        LocallyConstantPotential {
            table: self.table.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }
}

/// Tabulates `φ` on words of length `k`. A word that extends into a target
/// is continued inside that target, where the term vanishes; otherwise the
/// distance is already exact. The recorded error is `lip_bound · 2^{-k}`.
pub fn truncate_depth(phi: &CombinedPotential, k: usize) -> Result<LocallyConstantPotential> {
    if k == 0 {
        return Err(Error::pre("depth must be at least 1"));
    }
    let n = (phi.alphabet as usize).pow(k as u32);
    let table = (0..n).map(|i| phi.eval(&index_word(i, k, phi.alphabet))).collect();
    let mut t = LocallyConstantPotential::new(phi.alphabet, k, table)?;
    t.lip_bound = phi.lip_bound();
    t.error_bound = if phi.terms.is_empty() { 0.0 } else { t.lip_bound * 0.5f64.powi(k as i32) };
    Ok(t)
}
