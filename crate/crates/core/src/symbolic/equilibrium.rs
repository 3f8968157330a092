use super::potential::LocallyConstantPotential;
use super::sft::word_index;
use crate::numerics::{perron, LogScalar, PerronData, SparseNonnegMatrix};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Relative eigen-residual requested from the Perron solver.
pub const PERRON_TOLERANCE: f64 = 1e-13;

/// Shift-invariant order-`depth` Markov measure on the full shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderMeasure {
    pub alphabet: u8,
    pub depth: usize,
    /// `μ[w]` for `w ∈ F^depth` in index order.
    pub weights: Vec<f64>,
    /// Transition probabilities between `(depth-1)`-words (between symbols
    /// when `depth = 1`): `kernel[u]` lists `(v, P(u → v))`.
    pub kernel: Vec<Vec<(usize, f64)>>,
    /// Pressure `P(βφ)` in nats.
    pub pressure: f64,
}

/// Transfer matrix on words of length `k - 1` (`k >= 2`): `u → v` with
/// weight `exp(β φ(u v_last))`.
pub fn transfer_matrix(phi: &LocallyConstantPotential, beta: f64) -> Result<SparseNonnegMatrix> {
    let k = phi.depth;
    if k < 2 {
        return Err(Error::pre("transfer matrices need depth >= 2"));
    }
    let a = phi.alphabet as usize;
    let n = a.pow((k - 1) as u32);
    let rows = (0..n)
        .map(|u| {
            (0..a)
                .map(|s| {
                    let w = u * a + s;
                    (w % n, LogScalar::from_ln(beta * phi.table[w]))
                })
                .collect()
        })
        .collect();
    SparseNonnegMatrix::new(n, rows)
}

struct Spectral {
    data: PerronData,
    matrix: SparseNonnegMatrix,
    phi: LocallyConstantPotential,
}

fn spectral(phi: &LocallyConstantPotential, beta: f64) -> Result<Spectral> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::pre(format!("beta must be finite and >= 0, got {beta}")));
    }
    let phi = if phi.depth < 2 { phi.deepen(2)? } else { phi.clone() };
    let matrix = transfer_matrix(&phi, beta)?;
    let data = perron(&matrix, PERRON_TOLERANCE)?;
    Ok(Spectral { data, matrix, phi })
}

pub fn pressure(phi: &LocallyConstantPotential, beta: f64) -> Result<f64> {
    Ok(spectral(phi, beta)?.data.value.ln())
}

/// Equilibrium state of `β φ`: `μ[u a] = l(u) A(u, v) r(v) / λ` on the edges
/// `u → v` of the transfer matrix, marginalized to `φ.depth`.
pub fn equilibrium_state(phi: &LocallyConstantPotential, beta: f64) -> Result<CylinderMeasure> {
    let sp = spectral(phi, beta)?;
    let lambda_ln = sp.data.value.ln();
    let (l, r) = (&sp.data.left, &sp.data.right);
    let n = sp.matrix.dimension();
    let a = phi.alphabet as usize;
    let mut edge_weights = vec![0.0; n * a];
    let mut kernel = Vec::with_capacity(n);
    for (u, row) in sp.matrix.rows().iter().enumerate() {
        let mut k_row = Vec::with_capacity(row.len());
        for &(v, w) in row {
            let s = v % a;
            let t = (w.ln() - lambda_ln).exp();
            edge_weights[u * a + s] = l[u] * t * r[v];
            k_row.push((v, t * r[v] / r[u]));
        }
        kernel.push(k_row);
    }
    let total: f64 = edge_weights.iter().sum();
    edge_weights.iter_mut().for_each(|w| *w /= total);
    let k = phi.depth;
    let (weights, kernel) = if k == sp.phi.depth {
        (edge_weights, kernel)
    } else {
        // Depth 1: marginalize pairs to their first symbol; the kernel on
        // symbols is the pair kernel itself.
        let mut w = vec![0.0; a];
        for (idx, x) in edge_weights.iter().enumerate() {
            w[idx / a] += x;
        }
        (w, kernel)
    };
    Ok(CylinderMeasure {
        alphabet: phi.alphabet,
        depth: k,
        weights,
        kernel,
        pressure: lambda_ln,
    })
}

impl CylinderMeasure {
    /// Weights of words of length `j <= depth`, by marginalizing the last
    /// symbols.
    pub fn marginal(&self, j: usize) -> Result<Vec<f64>> {
        if j > self.depth {
            return Err(Error::pre(format!("cannot marginalize depth {} to {j}", self.depth)));
        }
        let a = self.alphabet as usize;
        let block = a.pow((self.depth - j) as u32);
        let mut out = vec![0.0; a.pow(j as u32)];
        for (i, w) in self.weights.iter().enumerate() {
            out[i / block] += w;
        }
        Ok(out)
    }

    /// Largest violation of `Σ_a μ[a w] = Σ_b μ[w b]` over `(depth-1)`-words.
    pub fn stationarity_defect(&self) -> f64 {
        if self.depth < 2 {
            return 0.0;
        }
        let a = self.alphabet as usize;
        let n = a.pow((self.depth - 1) as u32);
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for (i, w) in self.weights.iter().enumerate() {
            left[i % n] += w;
            right[i / a] += w;
        }
        left.iter().zip(&right).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// CSV with columns `word,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            let word = super::sft::index_word(i, self.depth, self.alphabet);
            let s: String = word.iter().map(|d| char::from(b'0' + d)).collect();
            let _ = writeln!(out, "{s},{w:e}");
        }
        out
    }
}

/// `μ(∪ [w])` for a set of words of one common length `j <= depth`.
pub fn clopen_mass(mu: &CylinderMeasure, words: &[Vec<u8>]) -> Result<f64> {
    let Some(first) = words.first() else {
        return Ok(0.0);
    };
    let j = first.len();
    if words.iter().any(|w| w.len() != j) {
        return Err(Error::pre("clopen words must share one length"));
    }
    let marg = mu.marginal(j)?;
    let mut idx: Vec<usize> = words.iter().map(|w| word_index(w, mu.alphabet)).collect();
    idx.sort_unstable();
    idx.dedup();
    Ok(idx.into_iter().map(|i| marg[i]).sum())
}

/// `U^+ = [000] ∪ [001] ∪ [010] ∪ [100]`, a clopen neighbourhood of `X(2)`.
pub fn u_plus() -> Vec<Vec<u8>> {
    vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]
}

/// The complement of [`u_plus`] in `F^3`.
pub fn u_minus() -> Vec<Vec<u8>> {
    vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0], vec![1, 1, 1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth1(a: f64, b: f64) -> LocallyConstantPotential {
        LocallyConstantPotential::new(2, 1, vec![a, b]).unwrap()
    }

    #[test]
    fn bernoulli_closed_form() {
        let beta = 1.7;
        let mu = equilibrium_state(&depth1(0.3, -0.4), beta).unwrap();
        let p0 = (beta * 0.3f64).exp() / ((beta * 0.3f64).exp() + (beta * -0.4f64).exp());
        assert!((mu.weights[0] - p0).abs() < 1e-12);
        let want = ((beta * 0.3f64).exp() + (beta * -0.4f64).exp()).ln();
        assert!((mu.pressure - want).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_is_uniform() {
        let phi = LocallyConstantPotential::new(2, 3, vec![0.1, 0.5, -0.2, 0.0, 0.3, 0.9, 0.4, -1.0]).unwrap();
        let mu = equilibrium_state(&phi, 0.0).unwrap();
        assert!(mu.weights.iter().all(|w| (w - 0.125).abs() < 1e-12));
        assert!((mu.pressure - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clopen_masses() {
        let mu = equilibrium_state(&depth1(0.0, 0.0), 1.0).unwrap().clone();
        let uniform3 = CylinderMeasure {
            depth: 3,
            weights: vec![0.125; 8],
            ..mu
        };
        assert!((clopen_mass(&uniform3, &u_plus()).unwrap() - 0.5).abs() < 1e-15);
        let p = 0.9f64;
        let phi = depth1(p.ln(), (1.0 - p).ln());
        let bern = equilibrium_state(&phi.deepen(3).unwrap(), 1.0).unwrap();
        let want = p.powi(3) + 3.0 * p * p * (1.0 - p);
        assert!((clopen_mass(&bern, &u_plus()).unwrap() - want).abs() < 1e-12);
        let all: Vec<Vec<u8>> = super::super::sft::all_words(2, 2).collect();
        assert!((clopen_mass(&bern, &all).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationarity() {
        let phi = LocallyConstantPotential::new(2, 3, vec![0.1, 0.5, -0.2, 0.0, 0.3, 0.9, 0.4, -1.0]).unwrap();
        let mu = equilibrium_state(&phi, 2.5).unwrap();
        assert!(mu.stationarity_defect() < 1e-12);
        assert!((mu.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
