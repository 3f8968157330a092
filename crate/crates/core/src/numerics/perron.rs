//! Perron eigendata of sparse nonnegative irreducible matrices.

use super::LogScalar;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

const MAX_ITERATIONS: usize = 2_000_000;
/// Residual accepted once iteration stops improving (rounding floor).
const STALL_FLOOR: f64 = 1e-10;
const STALL_WINDOW: usize = 2_000;
/// Matrices up to this size go straight to repeated squaring.
const DENSE_DIRECT: usize = 64;
/// Matrices up to this size fall back to repeated squaring when power
/// iteration is slow.
const DENSE_FALLBACK: usize = 512;
const FALLBACK_BUDGET: usize = 200_000;
const MAX_SQUARINGS: usize = 256;
const SQUARING_TOLERANCE: f64 = 1e-13;

/// Square matrix with nonnegative entries stored row-wise as log-weights.
///
/// Zero weights are dropped on construction, so the stored pattern is the
/// support graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseNonnegMatrix {
    dimension: usize,
    rows: Vec<Vec<(usize, LogScalar)>>,
}

impl SparseNonnegMatrix {
    pub fn new(dimension: usize, rows: Vec<Vec<(usize, LogScalar)>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::pre("matrix dimension must be positive"));
        }
        if rows.len() != dimension {
            return Err(Error::pre(format!(
                "expected {dimension} rows, got {}",
                rows.len()
            )));
        }
        let mut clean = Vec::with_capacity(dimension);
        for (i, row) in rows.into_iter().enumerate() {
            let mut r: Vec<(usize, LogScalar)> = Vec::with_capacity(row.len());
            for (j, w) in row {
                if j >= dimension {
                    return Err(Error::pre(format!("column {j} out of range in row {i}")));
                }
                if w.ln().is_nan() {
                    return Err(Error::pre(format!("NaN weight at ({i}, {j})")));
                }
                if !w.is_zero() {
                    r.push((j, w));
                }
            }
            r.sort_by_key(|&(j, _)| j);
            // Merge duplicate columns by summing.
            let mut merged: Vec<(usize, LogScalar)> = Vec::with_capacity(r.len());
            for (j, w) in r {
                match merged.last_mut() {
                    Some((lj, lw)) if *lj == j => *lw = *lw + w,
                    _ => merged.push((j, w)),
                }
            }
            clean.push(merged);
        }
        Ok(SparseNonnegMatrix {
            dimension,
            rows: clean,
        })
    }

    /// Convenience constructor from a dense table of linear values.
    pub fn from_dense(values: &[Vec<f64>]) -> Result<Self> {
        let n = values.len();
        let rows = values
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::pre("dense matrix is not square"));
                }
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if !(v >= 0.0) {
                            return Err(Error::pre(format!("negative or NaN entry {v}")));
                        }
                        Ok((j, LogScalar::from_value(v)))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, rows)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> &[Vec<(usize, LogScalar)>] {
        &self.rows
    }

    pub fn transpose(&self) -> SparseNonnegMatrix {
        let mut rows = vec![Vec::new(); self.dimension];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                rows[j].push((i, w));
            }
        }
        SparseNonnegMatrix {
            dimension: self.dimension,
            rows,
        }
    }

    /// Every entry multiplied by `t` (added in the log domain).
    pub fn scaled(&self, t: LogScalar) -> SparseNonnegMatrix {
        SparseNonnegMatrix {
            dimension: self.dimension,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, w)| (j, w * t)).filter(|(_, w)| !w.is_zero()).collect())
                .collect(),
        }
    }

    fn reach(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.dimension];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.rows[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Strong connectivity of the support graph.
    pub fn is_irreducible(&self) -> bool {
        self.reach(0).iter().all(|&s| s) && self.transpose().reach(0).iter().all(|&s| s)
    }

    /// Period of the support graph (gcd of cycle lengths); assumes irreducibility.
    pub fn period(&self) -> usize {
        let mut level = vec![usize::MAX; self.dimension];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        let mut g = 0usize;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.rows[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    let d = (level[u] + 1).abs_diff(level[v]);
                    g = num_integer::gcd(g, d);
                }
            }
        }
        g.max(1)
    }
}

/// Spectral radius and normalized positive eigenvectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerronData {
    pub value: LogScalar,
    /// Left eigenvector, scaled so that `⟨left, right⟩ = 1`.
    pub left: Vec<f64>,
    /// Right eigenvector, scaled to maximum entry 1.
    pub right: Vec<f64>,
    pub iterations: usize,
}

/// Perron data with relative eigen-residual at most `tol`.
///
/// Weights are rescaled by the largest stored entry before iterating in the
/// linear domain. Entries smaller than `e^{-745}` relative to that maximum
/// underflow to zero, so eigenvector components may become zero for
/// extremely ill-scaled inputs.
pub fn perron(m: &SparseNonnegMatrix, tol: f64) -> Result<PerronData> {
    if !(tol > 0.0) {
        return Err(Error::pre(format!("tolerance must be positive, got {tol}")));
    }
    if !m.is_irreducible() {
        return Err(Error::pre("support graph is not strongly connected"));
    }
    let max_ln = m
        .rows
        .iter()
        .flatten()
        .map(|(_, w)| w.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let lin = Linear::new(m, max_ln);
    let n = m.dimension;
    let (lambda, right, mut left, iterations) = if n <= DENSE_DIRECT {
        dense_squaring(&lin)?
    } else {
        let lin_t = Linear::new(&m.transpose(), max_ln);
        let lazy = m.period() > 1;
        let budget = if n <= DENSE_FALLBACK { FALLBACK_BUDGET } else { MAX_ITERATIONS };
        let iterated = power_iterate(&lin, tol, lazy, budget).and_then(|(lambda, right, it_r)| {
            let (_, left, it_l) = power_iterate(&lin_t, tol, lazy, budget)?;
            Ok((lambda, right, left, it_r + it_l))
        });
        match iterated {
            Err(Error::Convergence { .. }) if n <= DENSE_FALLBACK => dense_squaring(&lin)?,
            other => other?,
        }
    };
    let pairing: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    if !(pairing > 0.0) {
        return Err(Error::Convergence {
            iterations,
            residual: f64::INFINITY,
        });
    }
    for l in &mut left {
        *l /= pairing;
    }
    Ok(PerronData {
        value: LogScalar::from_ln(lambda.ln() + max_ln),
        left,
        right,
        iterations,
    })
}

/// Perron data of a small matrix from the powers `(A + I)^{2^j}`, each
/// rescaled to maximum entry 1, which become rank one `r l^T`. Only sums
/// and products of nonnegative numbers are formed, so nearly periodic or
/// nearly decomposable matrices cause no cancellation.
fn dense_squaring(a: &Linear) -> Result<(f64, Vec<f64>, Vec<f64>, usize)> {
    let n = a.rows.len();
    let mut b = vec![0.0; n * n];
    for (i, row) in a.rows.iter().enumerate() {
        for &(j, w) in row {
            b[i * n + j] += w;
        }
        b[i * n + i] += 1.0;
    }
    let mut c = vec![0.0; n * n];
    let mut settled = false;
    let mut squarings = 0;
    while squarings < MAX_SQUARINGS && !settled {
        c.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for k in 0..n {
                let x = b[i * n + k];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    c[i * n + j] += x * b[k * n + j];
                }
            }
        }
        let s = c.iter().fold(0.0f64, |m, &v| m.max(v));
        c.iter_mut().for_each(|v| *v /= s);
        settled = b
            .iter()
            .zip(&c)
            .all(|(x, y)| (x - y).abs() <= SQUARING_TOLERANCE * x.max(*y) || x.max(*y) < f64::MIN_POSITIVE);
        std::mem::swap(&mut b, &mut c);
        squarings += 1;
    }
    if !settled {
        return Err(Error::Convergence {
            iterations: squarings,
            residual: f64::NAN,
        });
    }
    let mut right: Vec<f64> = (0..n).map(|i| b[i * n..(i + 1) * n].iter().sum()).collect();
    let mut left: Vec<f64> = (0..n).map(|j| (0..n).map(|i| b[i * n + j]).sum()).collect();
    for v in [&mut right, &mut left] {
        let s = max_norm(v);
        v.iter_mut().for_each(|x| *x /= s);
    }
    let mut ar = vec![0.0; n];
    a.apply(&right, &mut ar);
    let num: f64 = left.iter().zip(&ar).map(|(l, y)| l * y).sum();
    let den: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    Ok((num / den, right, left, squarings))
}

struct Linear {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Linear {
    fn new(m: &SparseNonnegMatrix, shift: f64) -> Self {
        Linear {
            rows: m
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, w)| (j, (w.ln() - shift).exp())).collect())
                .collect(),
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, w)| w * x[j]).sum();
        }
    }
}

fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

fn power_iterate(a: &Linear, tol: f64, lazy: bool, budget: usize) -> Result<(f64, Vec<f64>, usize)> {
    let n = a.rows.len();
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let (mut best, mut best_at) = (f64::INFINITY, 0);
    for it in 1..=budget {
        a.apply(&x, &mut y);
        // Rayleigh-type estimate: ratio on the largest component of x.
        let norm_x = max_norm(&x);
        let ny = max_norm(&y);
        if ny == 0.0 {
            return Err(Error::Convergence {
                iterations: it,
                residual: f64::INFINITY,
            });
        }
        let est = y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
            / x.iter().map(|b| b * b).sum::<f64>();
        let lambda = est.max(f64::MIN_POSITIVE);
        residual = y
            .iter()
            .zip(&x)
            .fold(0.0f64, |acc, (yi, xi)| acc.max((yi - lambda * xi).abs()))
            / (lambda * norm_x);
        if residual < 0.5 * best {
            best = residual;
            best_at = it;
        }
        let stalled = best <= STALL_FLOOR && it - best_at >= STALL_WINDOW;
        if residual <= tol || stalled {
            let s = max_norm(&x);
            x.iter_mut().for_each(|v| *v /= s);
            return Ok((lambda, x, it));
        }
        if lazy {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += lambda * xi;
            }
        }
        let s = max_norm(&y);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / s;
        }
    }
    Err(Error::Convergence {
        iterations: budget,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_ones_doubles() {
        let m = SparseNonnegMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let p = perron(&m, 1e-13).unwrap();
        assert!((p.value.value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fibonacci_matrix_gives_golden_ratio() {
        let m = SparseNonnegMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = perron(&m, 1e-14).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.value.value() - phi).abs() < 1e-12);
        let pairing: f64 = p.left.iter().zip(&p.right).map(|(a, b)| a * b).sum();
        assert!((pairing - 1.0).abs() < 1e-12);
        assert!(p.left.iter().chain(&p.right).all(|&v| v > 0.0));
    }

    #[test]
    fn two_cycle_is_damped() {
        let m = SparseNonnegMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.period(), 2);
        let p = perron(&m, 1e-13).unwrap();
        assert!((p.value.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_cycle_with_weights() {
        // Cycle weights 2, 3, 4: radius (24)^{1/3}.
        let m = SparseNonnegMatrix::from_dense(&[
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
            vec![4.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(m.period(), 3);
        let p = perron(&m, 1e-13).unwrap();
        assert!((p.value.value() - 24f64.powf(1.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn reducible_support_is_rejected() {
        let m = SparseNonnegMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(perron(&m, 1e-10), Err(Error::Precondition(_))));
    }

    #[test]
    fn huge_log_weights_do_not_overflow() {
        let big = LogScalar::from_ln(5000.0);
        let m = SparseNonnegMatrix::new(2, vec![vec![(0, big), (1, big)], vec![(0, big), (1, big)]]).unwrap();
        let p = perron(&m, 1e-13).unwrap();
        assert!((p.value.ln() - (5000.0 + 2f64.ln())).abs() < 1e-10);
    }

    fn dense_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..6).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0.1f64..5.0, n), n)
        })
    }

    proptest! {
        #[test]
        fn transpose_and_scaling_agree(values in dense_strategy(), t in -3.0f64..3.0) {
            let m = SparseNonnegMatrix::from_dense(&values).unwrap();
            let tol = 1e-12;
            let p = perron(&m, tol).unwrap();
            let pt = perron(&m.transpose(), tol).unwrap();
            prop_assert!((p.value.ln() - pt.value.ln()).abs() < 1e-9);
            let ps = perron(&m.scaled(LogScalar::from_ln(t)), tol).unwrap();
            prop_assert!((ps.value.ln() - p.value.ln() - t).abs() < 1e-9);
        }
    }
}
