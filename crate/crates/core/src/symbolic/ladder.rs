use super::sft::{runlength_sft, sft_entropy, Sft};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LadderSpec {
    /// `X_m^+ = X(g(m))` with `g(m) = m + offset`, `X_m^- = flip(X_m^+)`.
    RunLength { offset: usize },
    /// `X_m^+` = approximant of a target subshift at word length `lengths[m]`,
    /// `X_m^-` its flip. The target is the Fibonacci subshift.
    WordApproximant { lengths: Vec<usize> },
}

impl LadderSpec {
    /// The run-length ladder `g(m) = m + 2`.
    pub fn standard() -> Self {
        LadderSpec::RunLength { offset: 2 }
    }
}

/// Paired decreasing sequences `X_m^+`, `X_m^-` for `m = 0..=M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub plus: Vec<Sft>,
    pub minus: Vec<Sft>,
    pub entropy_plus: Vec<f64>,
    pub entropy_minus: Vec<f64>,
}

impl Ladder {
    pub fn depth(&self) -> usize {
        self.plus.len() - 1
    }

    pub fn member(&self, m: usize, plus: bool) -> &Sft {
        if plus {
            &self.plus[m]
        } else {
            &self.minus[m]
        }
    }
}

/// Is every point of `b` a point of `a`? Checked on words of length
/// `len`, which is exact once `len` exceeds both orders.
fn language_included(b: &Sft, a: &Sft, len: usize) -> bool {
    let la = a.extender();
    b.language(len).iter().all(|w| la.extends(w))
}

/// Builds the ladder and checks disjointness of `X_0^±`, nesting
/// `X_{m+1}^± ⊂ X_m^±`, and the interlaced strict inequalities
/// `h(X_{m+1}^∓) < h(X_m^±)`.
pub fn entropy_ladder(spec: &LadderSpec, m_max: usize) -> Result<Ladder> {
    let mut plus = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let x = match spec {
            LadderSpec::RunLength { offset } => runlength_sft(m + offset, false)?,
            LadderSpec::WordApproximant { lengths } => {
                let len = *lengths.get(m).ok_or_else(|| {
                    Error::pre(format!("approximant length for level {m} missing"))
                })?;
                super::sft::sft_word_approximants(super::sft::fibonacci_oracle, 2, len)?
            }
        };
        plus.push(x);
    }
    let minus = plus.iter().map(|x| x.flipped()).collect::<Result<Vec<_>>>()?;
    let entropy_plus = plus.iter().map(sft_entropy).collect::<Result<Vec<_>>>()?;
    let entropy_minus = minus.iter().map(sft_entropy).collect::<Result<Vec<_>>>()?;

    let len = plus.iter().map(|x| x.order()).max().unwrap_or(1) + 2;
    let l0 = plus[0].language(len);
    let e = minus[0].extender();
    if l0.iter().any(|w| e.extends(w)) {
        return Err(Error::Construction("X_0^+ and X_0^- intersect".into()));
    }
    for m in 0..m_max {
        if !language_included(&plus[m + 1], &plus[m], len) || !language_included(&minus[m + 1], &minus[m], len) {
            return Err(Error::Construction(format!("level {} is not nested in level {m}", m + 1)));
        }
        if !(entropy_minus[m + 1] < entropy_plus[m] && entropy_plus[m + 1] < entropy_minus[m]) {
            return Err(Error::Construction(format!("entropy interlacing fails at m = {m}")));
        }
    }
    Ok(Ladder {
        plus,
        minus,
        entropy_plus,
        entropy_minus,
    })
}
