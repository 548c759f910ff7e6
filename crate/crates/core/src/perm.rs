//! Permutations in one-line notation and the left weak Bruhat order.
//!
//! The public contract is 1-based: entry `i` of a permutation of size `n` is
//! a value in `1..=n`. Storage is 0-based internally.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("a permutation needs at least one entry")]
    Empty,
    #[error("value {value} is outside 1..={n}")]
    OutOfRange { value: usize, n: usize },
    #[error("value {value} appears more than once")]
    Duplicate { value: usize },
    #[error("value {value} is missing")]
    Missing { value: usize },
    #[error("cannot parse {token:?} as a permutation entry")]
    Parse { token: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid index vector: {0}")]
    IndexVector(String),
}

/// A bijection of `{1, …, n}`, `n ≥ 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    vals: Vec<u32>,
}

impl Permutation {
    /// Validates 1-based one-line notation.
    pub fn new(entries: Vec<usize>) -> Result<Self, PermError> {
        let n = entries.len();
        if n == 0 {
            return Err(PermError::Empty);
        }
        let mut seen = vec![false; n];
        for &v in &entries {
            if v == 0 || v > n {
                return Err(PermError::OutOfRange { value: v, n });
            }
            if seen[v - 1] {
                return Err(PermError::Duplicate { value: v });
            }
            seen[v - 1] = true;
        }
        // a duplicate is always reported first, so nothing can be missing here
        debug_assert!(seen.iter().all(|&s| s));
        Ok(Self {
            vals: entries.into_iter().map(|v| (v - 1) as u32).collect(),
        })
    }

    /// Builds from 0-based values without validation. Callers guarantee a bijection.
    pub(crate) fn from_zero_based(vals: Vec<u32>) -> Self {
        debug_assert!(is_bijection(&vals));
        Self { vals }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "permutation size must be positive");
        Self::from_zero_based((0..n as u32).collect())
    }

    /// `id^r = (n, …, 2, 1)`.
    pub fn reversed_identity(n: usize) -> Self {
        Self::identity(n).reverse()
    }

    /// The adjacent transposition `s_i = (i, i+1)` in `S_n`, `1 ≤ i < n`.
    pub fn adjacent_transposition(n: usize, i: usize) -> Result<Self, PermError> {
        if i == 0 || i >= n {
            return Err(PermError::OutOfRange { value: i, n: n.saturating_sub(1) });
        }
        let mut vals: Vec<u32> = (0..n as u32).collect();
        vals.swap(i - 1, i);
        Ok(Self::from_zero_based(vals))
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    /// Always false; permutations have at least one entry.
    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// `π(i)` for 1-based `i`.
    pub fn get(&self, i: usize) -> usize {
        self.vals[i - 1] as usize + 1
    }

    /// 1-based one-line notation.
    pub fn one_line(&self) -> Vec<usize> {
        self.vals.iter().map(|&v| v as usize + 1).collect()
    }

    /// 0-based values, `π(i+1) - 1` at index `i`.
    pub fn as_zero_based(&self) -> &[u32] {
        &self.vals
    }

    pub fn is_identity(&self) -> bool {
        self.vals.iter().enumerate().all(|(i, &v)| v as usize == i)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.len()];
        for (i, &v) in self.vals.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Self::from_zero_based(inv)
    }

    /// `π^r(i) = π(n + 1 − i)`.
    pub fn reverse(&self) -> Self {
        Self::from_zero_based(self.vals.iter().rev().copied().collect())
    }

    /// `(s ∘ p)(i) = s(p(i))`, multiplying right to left.
    pub fn compose(s: &Self, p: &Self) -> Result<Self, PermError> {
        check_lengths(s, p)?;
        Ok(Self::from_zero_based(
            p.vals.iter().map(|&v| s.vals[v as usize]).collect(),
        ))
    }

    /// `s_i ∘ self`: swaps the values `i` and `i + 1`.
    pub fn swap_values(&self, i: usize) -> Self {
        assert!(i >= 1 && i < self.len(), "adjacent transposition index out of range");
        let (a, b) = ((i - 1) as u32, i as u32);
        Self::from_zero_based(
            self.vals
                .iter()
                .map(|&v| if v == a { b } else if v == b { a } else { v })
                .collect(),
        )
    }

    /// `l(π)`, counted with a Fenwick tree in `O(n log n)`.
    pub fn inversion_number(&self) -> u64 {
        let n = self.len();
        let mut tree = Fenwick::new(n);
        let mut count = 0u64;
        for (seen, &v) in self.vals.iter().enumerate() {
            // earlier entries that are larger than v
            count += (seen - tree.prefix_sum(v as usize + 1)) as u64;
            tree.add(v as usize, 1);
        }
        count
    }

    pub fn inversion_set(&self) -> InversionSet {
        let n = self.len();
        let mut pairs = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.vals[i] > self.vals[j] {
                    pairs.insert((i + 1, j + 1));
                }
            }
        }
        InversionSet { n, pairs }
    }

    /// Left weak order: `Inv(self) ⊆ Inv(other)`.
    pub fn bruhat_leq(&self, other: &Self) -> Result<bool, PermError> {
        check_lengths(self, other)?;
        let (p, t) = (&self.vals, &other.vals);
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] && t[i] < t[j] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The permutation `π_a` of size `k` induced by the entries at positions `a`.
    pub fn induced(&self, a: &IndexVector) -> Result<Self, PermError> {
        if a.n != self.len() {
            return Err(PermError::IndexVector(format!(
                "index vector built for n={} applied to a permutation of size {}",
                a.n,
                self.len()
            )));
        }
        let picked: Vec<u32> = a.indices.iter().map(|&i| self.vals[i - 1]).collect();
        Ok(Self::from_zero_based(rank_zero_based(&picked)))
    }

    /// Every permutation of size `n` in lexicographic order.
    pub fn all(n: usize) -> AllPermutations {
        assert!(n >= 1, "permutation size must be positive");
        AllPermutations {
            next: Some((0..n as u32).collect()),
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = PermError;

    /// Parses comma-separated one-line notation such as `"2,4,1,3"`.
    /// Non-bijections are reported by their first duplicate, then by their
    /// smallest missing value.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(PermError::Empty);
        }
        let entries = s
            .split(',')
            .map(|tok| {
                tok.trim().parse::<usize>().map_err(|_| PermError::Parse {
                    token: tok.trim().to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = entries.len();
        let mut seen = vec![false; n + 1];
        for &v in &entries {
            if v == 0 {
                return Err(PermError::OutOfRange { value: v, n });
            }
            if v <= n {
                if seen[v] {
                    return Err(PermError::Duplicate { value: v });
                }
                seen[v] = true;
            }
        }
        if let Some(missing) = (1..=n).find(|&v| !seen[v]) {
            return Err(PermError::Missing { value: missing });
        }
        Self::new(entries)
    }
}

/// `Inv(π)`: position pairs `(i, j)`, `i < j`, with `π(i) > π(j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionSet {
    n: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl InversionSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.n == other.n && self.pairs.is_subset(&other.pairs)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

/// Strictly increasing 1-based positions `a_1 < … < a_k` in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexVector {
    n: usize,
    indices: Vec<usize>,
}

impl IndexVector {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self, PermError> {
        if indices.is_empty() || indices.len() > n {
            return Err(PermError::IndexVector(format!(
                "length {} not in 1..={n}",
                indices.len()
            )));
        }
        if indices.iter().any(|&i| i == 0 || i > n) {
            return Err(PermError::IndexVector(format!("entries must lie in 1..={n}")));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PermError::IndexVector("entries must be strictly increasing".into()));
        }
        Ok(Self { n, indices })
    }

    /// `(1, 2, …, n)`, the sole member of `Q(n, n)`.
    pub fn full(n: usize) -> Self {
        Self { n, indices: (1..=n).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Lexicographic enumeration of `S_n`.
pub struct AllPermutations {
    next: Option<Vec<u32>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if next_lexicographic(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation::from_zero_based(cur))
    }
}

fn next_lexicographic(v: &mut [u32]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Replaces distinct values by their 0-based ranks.
pub(crate) fn rank_zero_based(values: &[u32]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by_key(|&i| values[i]);
    let mut ranks = vec![0u32; values.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r as u32;
    }
    ranks
}

fn is_bijection(vals: &[u32]) -> bool {
    let mut seen = vec![false; vals.len()];
    vals.iter().all(|&v| {
        let v = v as usize;
        v < seen.len() && !std::mem::replace(&mut seen[v], true)
    })
}

fn check_lengths(a: &Permutation, b: &Permutation) -> Result<(), PermError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(PermError::LengthMismatch { left: a.len(), right: b.len() })
    }
}

/// Binary indexed tree over `0..n` counting inserted values.
pub(crate) struct Fenwick {
    tree: Vec<usize>,
}

impl Fenwick {
    pub(crate) fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    pub(crate) fn add(&mut self, idx: usize, delta: usize) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    pub(crate) fn sub(&mut self, idx: usize, delta: usize) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] -= delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `0..end`.
    pub(crate) fn prefix_sum(&self, end: usize) -> usize {
        let mut i = end;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest index whose prefix sum (inclusive) reaches `k`, for `k ≥ 1`.
    pub(crate) fn find_kth(&self, mut k: usize) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < k {
                pos = next;
                k -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
