use crate::numerics::{perron, LogScalar, SparseNonnegMatrix};
use crate::{Error, Result};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type Word = Vec<u8>;

/// Index of `w` read as a base-`alphabet` numeral, first symbol most
/// significant.
pub fn word_index(w: &[u8], alphabet: u8) -> usize {
    w.iter().fold(0, |acc, &s| acc * alphabet as usize + s as usize)
}

/// Inverse of [`word_index`] for words of length `len`.
pub fn index_word(mut idx: usize, len: usize, alphabet: u8) -> Word {
    let a = alphabet as usize;
    let mut w = vec![0u8; len];
    for slot in w.iter_mut().rev() {
        *slot = (idx % a) as u8;
        idx /= a;
    }
    w
}

/// All words of length `len`, in index order.
pub fn all_words(len: usize, alphabet: u8) -> impl Iterator<Item = Word> {
    let count = (alphabet as usize).pow(len as u32);
    (0..count).map(move |i| index_word(i, len, alphabet))
}

fn contains(word: &[u8], pattern: &[u8]) -> bool {
    pattern.len() <= word.len() && word.windows(pattern.len()).any(|w| w == pattern)
}

/// One-sided subshift of finite type over `{0, .., alphabet-1}` given by a
/// list of forbidden words.
///
/// It is presented on words of length `order` (one less than the longest
/// forbidden word, at least 1): `u → v` is an edge when `u` and `v` overlap
/// in `order - 1` symbols and the joined word avoids every forbidden word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sft {
    alphabet: u8,
    order: usize,
    forbidden: Vec<Word>,
}

impl Sft {
    pub fn new(alphabet: u8, forbidden: Vec<Word>) -> Result<Self> {
        if alphabet < 1 {
            return Err(Error::pre("alphabet must be nonempty"));
        }
        if forbidden.iter().any(|w| w.is_empty() || w.iter().any(|&s| s >= alphabet)) {
            return Err(Error::pre("forbidden words must be nonempty words over the alphabet"));
        }
        let order = forbidden.iter().map(|w| w.len()).max().unwrap_or(2).max(2) - 1;
        let mut forbidden = forbidden;
        forbidden.sort();
        forbidden.dedup();
        // Drop words that contain another forbidden word.
        let minimal: Vec<Word> = forbidden
            .iter()
            .filter(|w| !forbidden.iter().any(|v| v != *w && contains(w, v)))
            .cloned()
            .collect();
        Ok(Sft {
            alphabet,
            order,
            forbidden: minimal,
        })
    }

    pub fn full_shift(alphabet: u8) -> Self {
        Sft {
            alphabet,
            order: 1,
            forbidden: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn forbidden(&self) -> &[Word] {
        &self.forbidden
    }

    /// Avoids every forbidden word.
    pub fn is_legal(&self, w: &[u8]) -> bool {
        !self.forbidden.iter().any(|f| contains(w, f))
    }

    /// Exchanges the symbols 0 and 1 of a binary shift.
    pub fn flipped(&self) -> Result<Self> {
        if self.alphabet != 2 {
            return Err(Error::pre("flip is defined on the binary alphabet"));
        }
        let f = self
            .forbidden
            .iter()
            .map(|w| w.iter().map(|s| 1 - s).collect())
            .collect();
        Sft::new(2, f)
    }

    /// Legal states and edges of the presentation.
    pub fn graph(&self) -> Presentation {
        let states: Vec<Word> = all_words(self.order, self.alphabet)
            .filter(|w| self.is_legal(w))
            .collect();
        let index: HashMap<Word, usize> = states.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut edges = vec![Vec::new(); states.len()];
        for (i, s) in states.iter().enumerate() {
            for a in 0..self.alphabet {
                let mut joined = s.clone();
                joined.push(a);
                if self.is_legal(&joined) {
                    if let Some(&j) = index.get(&joined[1..]) {
                        edges[i].push(j);
                    }
                }
            }
        }
        Presentation { states, edges }
    }

    /// States with an infinite forward path: the possible positions of a
    /// one-sided point.
    fn forward_viable(&self) -> (Presentation, Vec<bool>) {
        let g = self.graph();
        let mut alive = vec![true; g.states.len()];
        loop {
            let mut changed = false;
            for i in 0..alive.len() {
                if alive[i] && !g.edges[i].iter().any(|&j| alive[j]) {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (g, alive)
    }

    /// Essential part: states that lie on a bi-infinite path.
    pub fn essential(&self) -> Presentation {
        let g = self.graph();
        let n = g.states.len();
        let mut alive = vec![true; n];
        loop {
            let mut indeg = vec![0usize; n];
            for i in 0..n {
                if alive[i] {
                    for &j in &g.edges[i] {
                        if alive[j] {
                            indeg[j] += 1;
                        }
                    }
                }
            }
            let mut changed = false;
            for i in 0..n {
                let out = g.edges[i].iter().any(|&j| alive[j]);
                if alive[i] && (indeg[i] == 0 || !out) {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        g.restrict(&alive)
    }

    pub fn is_empty(&self) -> bool {
        self.essential().states.is_empty()
    }

    /// Words that occur as a prefix of some one-sided point.
    pub fn extender(&self) -> Extender {
        let (g, alive) = self.forward_viable();
        let viable = g
            .states
            .into_iter()
            .zip(alive)
            .filter_map(|(s, a)| a.then_some(s))
            .collect();
        Extender {
            sft: self.clone(),
            viable,
        }
    }

    /// Prefix-extendable words of length `len`.
    pub fn language(&self, len: usize) -> Vec<Word> {
        let e = self.extender();
        all_words(len, self.alphabet).filter(|w| e.extends(w)).collect()
    }
}

/// Membership test for prefixes of one-sided points of an SFT.
#[derive(Clone, Debug)]
pub struct Extender {
    sft: Sft,
    viable: std::collections::HashSet<Word>,
}

impl Extender {
    pub fn extends(&self, w: &[u8]) -> bool {
        if !self.sft.is_legal(w) {
            return false;
        }
        let r = self.sft.order;
        if w.len() >= r {
            self.viable.contains(&w[w.len() - r..])
        } else {
            self.viable.iter().any(|s| s.starts_with(w))
        }
    }

    /// Length of the longest prefix of `w` that extends.
    pub fn longest_prefix(&self, w: &[u8]) -> usize {
        // Extendability is prefix-closed, so binary search applies.
        let (mut lo, mut hi) = (0usize, w.len());
        if self.extends(w) {
            return w.len();
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.extends(&w[..mid]) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if self.extends(&w[..lo]) {
            lo
        } else {
            0
        }
    }
}

/// States and successor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub states: Vec<Word>,
    pub edges: Vec<Vec<usize>>,
}

impl Presentation {
    fn restrict(&self, keep: &[bool]) -> Presentation {
        let mut map = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if keep[i] {
                map[i] = states.len();
                states.push(s.clone());
            }
        }
        let edges = (0..self.states.len())
            .filter(|&i| keep[i])
            .map(|i| {
                self.edges[i]
                    .iter()
                    .filter(|&&j| keep[j])
                    .map(|&j| map[j])
                    .collect()
            })
            .collect();
        Presentation { states, edges }
    }

    /// Strongly connected components carrying at least one cycle.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.states.len()).map(|_| g.add_node(())).collect();
        for (i, succ) in self.edges.iter().enumerate() {
            for &j in succ {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .filter(|c| c.len() > 1 || self.edges[c[0]].contains(&c[0]))
            .collect()
    }
}

/// Topological entropy in nats: the largest log Perron root over the
/// irreducible components of the presentation.
pub fn sft_entropy(x: &Sft) -> Result<f64> {
    let g = x.essential();
    if g.states.is_empty() {
        return Err(Error::EmptyShift("no bi-infinite point".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for comp in g.components() {
        let mut pos = vec![usize::MAX; g.states.len()];
        for (k, &i) in comp.iter().enumerate() {
            pos[i] = k;
        }
        let rows = comp
            .iter()
            .map(|&i| {
                g.edges[i]
                    .iter()
                    .filter(|&&j| pos[j] != usize::MAX)
                    .map(|&j| (pos[j], LogScalar::ONE))
                    .collect()
            })
            .collect();
        let m = SparseNonnegMatrix::new(comp.len(), rows)?;
        best = best.max(perron(&m, 1e-14)?.value.ln());
    }
    Ok(best)
}

/// Binary shift in which any two 1s are separated by at least `gap` zeros
/// (or, flipped, any two 0s by at least `gap` ones).
pub fn runlength_sft(gap: usize, flipped: bool) -> Result<Sft> {
    if gap == 0 {
        return Err(Error::pre("gap must be at least 1"));
    }
    let (one, zero) = if flipped { (0u8, 1u8) } else { (1u8, 0u8) };
    let forbidden = (0..gap)
        .map(|j| {
            let mut w = vec![one];
            w.extend(std::iter::repeat(zero).take(j));
            w.push(one);
            w
        })
        .collect();
    Sft::new(2, forbidden)
}

/// SFT whose allowed words of length `len` are exactly those accepted by
/// `oracle`.
pub fn sft_word_approximants(oracle: impl Fn(&[u8]) -> bool, alphabet: u8, len: usize) -> Result<Sft> {
    if len < 2 {
        return Err(Error::pre("approximants need word length at least 2"));
    }
    let mut accepted = 0usize;
    let forbidden: Vec<Word> = all_words(len, alphabet)
        .filter(|w| {
            let ok = oracle(w);
            accepted += ok as usize;
            !ok
        })
        .collect();
    if accepted == 0 {
        return Err(Error::EmptyShift(format!("oracle rejects every word of length {len}")));
    }
    let x = Sft::new(alphabet, forbidden)?;
    if x.is_empty() {
        return Err(Error::EmptyShift(format!("accepted words of length {len} admit no point")));
    }
    Ok(x)
}

/// Prefix of the Fibonacci word `0100101001001...` (fixed point of
/// `0 → 01, 1 → 0`).
pub fn fibonacci_word(len: usize) -> Word {
    let mut w = vec![0u8];
    while w.len() < len {
        w = w.iter().flat_map(|&s| if s == 0 { vec![0, 1] } else { vec![0] }).collect();
    }
    w.truncate(len);
    w
}

/// Language oracle of the Fibonacci subshift: `w` occurs in the Fibonacci
/// word. Factors of length `n` all occur within the first `8n + 16` symbols.
pub fn fibonacci_oracle(w: &[u8]) -> bool {
    let text = fibonacci_word(8 * w.len() + 16);
    contains(&text, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runlength_forbidden_words() {
        assert_eq!(runlength_sft(1, false).unwrap().forbidden(), &[vec![1, 1]]);
        assert_eq!(
            runlength_sft(2, false).unwrap().forbidden(),
            &[vec![1, 0, 1], vec![1, 1]]
        );
        assert_eq!(
            runlength_sft(2, true).unwrap().forbidden(),
            &[vec![0, 0], vec![0, 1, 0]]
        );
    }

    #[test]
    fn three_windows_partition() {
        let a = runlength_sft(2, false).unwrap().language(3);
        let b = runlength_sft(2, true).unwrap().language(3);
        assert_eq!(a, vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(b, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0], vec![1, 1, 1]]);
    }

    #[test]
    fn entropies() {
        let full = sft_entropy(&Sft::full_shift(2)).unwrap();
        assert!((full - 2f64.ln()).abs() < 1e-13);
        let gm = sft_entropy(&runlength_sft(1, false).unwrap()).unwrap();
        assert!((gm - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        // Real root of x^3 = x^2 + 1 by bisection.
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) - mid.powi(2) - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x2 = sft_entropy(&runlength_sft(2, false).unwrap()).unwrap();
        assert!((x2 - lo.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_shift_is_detected() {
        let x = Sft::new(2, vec![vec![0], vec![1]]).unwrap();
        assert!(x.is_empty());
        assert!(matches!(sft_entropy(&x), Err(Error::EmptyShift(_))));
    }

    #[test]
    fn fibonacci_approximants() {
        let s2 = sft_word_approximants(fibonacci_oracle, 2, 2).unwrap();
        assert_eq!(s2.forbidden(), &[vec![1, 1]]);
        let s3 = sft_word_approximants(fibonacci_oracle, 2, 3).unwrap();
        let target = Sft::new(2, vec![vec![1, 1], vec![0, 0, 0]]).unwrap();
        for n in 1..=8 {
            assert_eq!(s3.language(n), target.language(n));
        }
        assert!(sft_entropy(&s3).unwrap() < sft_entropy(&s2).unwrap());
    }

    #[test]
    fn longest_extendable_prefix() {
        let e = runlength_sft(1, false).unwrap().extender();
        assert_eq!(e.longest_prefix(&[0, 0, 1, 1]), 3);
        assert_eq!(e.longest_prefix(&[0, 1, 0]), 3);
        let only_zero = Sft::new(2, vec![vec![1]]).unwrap().extender();
        assert_eq!(only_zero.longest_prefix(&[1, 0]), 0);
    }

    #[test]
    fn index_roundtrip() {
        for i in 0..16 {
            assert_eq!(word_index(&index_word(i, 4, 2), 2), i);
        }
    }
}
