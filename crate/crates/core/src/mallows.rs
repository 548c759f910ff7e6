//! Mallows measures `μ_{n,q}(π) ∝ q^{l(π)}`.
//!
//! [`sample`] draws exactly from `μ_{n,q}` through a Lehmer code whose
//! entries are independent truncated geometrics. [`exact_pmf`] enumerates the
//! measure for small `n`. The block decomposition splits a permutation into
//! a value-block partition of positions and one inner permutation per block;
//! the inversion number splits additively across the two, which is what
//! makes [`BlockSampler`] exact.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perm::{Fenwick, IndexVector, Permutation};
use crate::scalar::Real;

/// Largest `n` accepted by [`exact_pmf`].
pub const EXACT_PMF_MAX_N: usize = 9;
/// Largest `n` accepted by the block sampler's exhaustive partition step.
pub const BLOCK_SAMPLE_MAX_N: usize = 10;

const UNIFORM_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MallowsError {
    #[error("n must be at least 1")]
    ZeroSize,
    #[error("q must be positive and finite, got {0}")]
    InvalidQ(f64),
    #[error("scaling parameters need n > |beta|; got n={n}, beta={beta}")]
    InvalidScaling { n: usize, beta: f64 },
    #[error("n={n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("block sizes must be positive and sum to {n}; got {sizes:?}")]
    BlockSpec { n: usize, sizes: Vec<usize> },
    #[error("inconsistent block decomposition: {0}")]
    Decomposition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MallowsParams {
    pub n: usize,
    pub q: f64,
}

impl MallowsParams {
    pub fn new(n: usize, q: f64) -> Result<Self, MallowsError> {
        if n == 0 {
            return Err(MallowsError::ZeroSize);
        }
        if !(q.is_finite() && q > 0.0) {
            return Err(MallowsError::InvalidQ(q));
        }
        Ok(Self { n, q })
    }

    /// `Z_{n,q}`.
    pub fn partition_function(&self) -> f64 {
        partition_function(self.n, self.q)
    }
}

/// The scaling regime `n(1 − q_n) = β`, realised as `q = 1 − β/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub n: usize,
    pub beta: f64,
}

impl ScalingParams {
    pub fn new(n: usize, beta: f64) -> Result<Self, MallowsError> {
        if n == 0 {
            return Err(MallowsError::ZeroSize);
        }
        if !beta.is_finite() || (n as f64) <= beta {
            return Err(MallowsError::InvalidScaling { n, beta });
        }
        Ok(Self { n, beta })
    }

    pub fn q(&self) -> f64 {
        1.0 - self.beta / self.n as f64
    }

    pub fn mallows(&self) -> MallowsParams {
        MallowsParams { n: self.n, q: self.q() }
    }
}

/// `Z_{n,q} = Π_{i=1}^{n} (1 − q^i)/(1 − q)`, or `n!` at `q = 1`.
pub fn partition_function<T: Real>(n: usize, q: T) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * geometric_sum(q, i))
}

/// `1 + q + … + q^{i−1}`.
fn geometric_sum<T: Real>(q: T, i: usize) -> T {
    if q == T::one() {
        return T::of(i);
    }
    let lq = q.ln();
    // (1 − q^i)/(1 − q) via expm1 to keep q ≈ 1 accurate
    (T::of(i) * lq).exp_m1() / lq.exp_m1()
}

/// The exact measure over `S_n` in lexicographic order of permutations.
pub fn exact_pmf(params: &MallowsParams) -> Result<BTreeMap<Permutation, f64>, MallowsError> {
    if params.n > EXACT_PMF_MAX_N {
        return Err(MallowsError::TooLarge { n: params.n, max: EXACT_PMF_MAX_N });
    }
    let z = params.partition_function();
    Ok(Permutation::all(params.n)
        .map(|p| {
            let w = params.q.powi(p.inversion_number() as i32) / z;
            (p, w)
        })
        .collect())
}

/// Draws `k ∈ {0, …, len−1}` with `P(k) ∝ q^k` by inverting the CDF
/// `(1 − q^{k+1})/(1 − q^{len})`.
pub fn truncated_geometric<R: Rng + ?Sized>(q: f64, len: usize, rng: &mut R) -> usize {
    debug_assert!(len >= 1);
    if len == 1 {
        return 0;
    }
    if (1.0 - q).abs() < UNIFORM_CUTOFF {
        return rng.random_range(0..len);
    }
    let u: f64 = rng.random();
    let lq = q.ln();
    // A = 1 − u(1 − q^len); the answer is ceil(ln A / ln q) − 1
    let log_a = (u * (len as f64 * lq).exp_m1()).ln_1p();
    let k = (log_a / lq).ceil() - 1.0;
    if k.is_nan() || k < 0.0 {
        0
    } else {
        (k as usize).min(len - 1)
    }
}

/// Exact draw from `μ_{n,q}`.
///
/// Position `j` carries `d_j = #{i < j : π(i) > π(j)}`, independent and
/// truncated-geometric on `{0, …, j−1}`; decoding fills positions right to
/// left, taking the `(d_j + 1)`-th largest unused value.
pub fn sample<R: Rng + ?Sized>(params: &MallowsParams, rng: &mut R) -> Permutation {
    let n = params.n;
    let code: Vec<usize> = (1..=n).map(|j| truncated_geometric(params.q, j, rng)).collect();
    decode_lehmer(&code)
}

/// Inverse of the left-larger Lehmer code. `code[j]` must lie in `0..=j`.
pub fn decode_lehmer(code: &[usize]) -> Permutation {
    let n = code.len();
    let mut free = Fenwick::new(n);
    for v in 0..n {
        free.add(v, 1);
    }
    let mut vals = vec![0u32; n];
    for j in (0..n).rev() {
        let remaining = j + 1;
        // (d+1)-th largest of the remaining values is the (remaining − d)-th smallest
        let v = free.find_kth(remaining - code[j]);
        free.sub(v, 1);
        vals[j] = v as u32;
    }
    Permutation::from_zero_based(vals)
}

/// Block sizes `c_1, …, c_m` with `Σ c_i = n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    sizes: Vec<usize>,
}

impl BlockSpec {
    pub fn new(sizes: Vec<usize>) -> Result<Self, MallowsError> {
        let n = sizes.iter().sum();
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(MallowsError::BlockSpec { n, sizes });
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `d_k = c_1 + … + c_k`, with `d_0 = 0`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.sizes.len() + 1);
        d.push(0);
        for &c in &self.sizes {
            d.push(d.last().unwrap() + c);
        }
        d
    }
}

/// `f_c(π) = ((A_1, …, A_m), τ_1, …, τ_m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    /// `A_i` as sorted 1-based positions.
    pub blocks: Vec<Vec<usize>>,
    pub inner: Vec<Permutation>,
}

impl BlockDecomposition {
    /// `l((A_1, …, A_m))`: pairs `x > y` with `x ∈ A_i`, `y ∈ A_j`, `i < j`.
    pub fn block_inversions(&self) -> u64 {
        block_inversions(&self.blocks)
    }
}

pub fn block_inversions(blocks: &[Vec<usize>]) -> u64 {
    let n: usize = blocks.iter().map(Vec::len).sum();
    let mut label = vec![0usize; n + 1];
    for (b, block) in blocks.iter().enumerate() {
        for &x in block {
            label[x] = b;
        }
    }
    count_label_inversions(&label[1..], blocks.len())
}

/// Pairs of positions `y < x` whose labels satisfy `label[x] < label[y]`.
fn count_label_inversions(labels: &[usize], m: usize) -> u64 {
    let mut seen_with_label = vec![0u64; m];
    let mut count = 0;
    for &l in labels {
        // earlier positions with a larger label are inversions with this one
        count += seen_with_label[l + 1..].iter().sum::<u64>();
        seen_with_label[l] += 1;
    }
    count
}

pub fn block_encode(p: &Permutation, spec: &BlockSpec) -> Result<BlockDecomposition, MallowsError> {
    let n = p.len();
    if spec.n() != n {
        return Err(MallowsError::BlockSpec { n, sizes: spec.sizes.clone() });
    }
    let d = spec.offsets();
    let m = spec.sizes.len();
    let mut value_block = vec![0usize; n];
    for b in 0..m {
        value_block[d[b]..d[b + 1]].fill(b);
    }
    let mut blocks = vec![Vec::new(); m];
    for (pos, &v) in p.as_zero_based().iter().enumerate() {
        blocks[value_block[v as usize]].push(pos + 1);
    }
    let inner = blocks
        .iter()
        .map(|a| {
            let iv = IndexVector::new(a.clone(), n).expect("block positions are sorted and in range");
            p.induced(&iv).expect("index vector built for this permutation")
        })
        .collect();
    Ok(BlockDecomposition { blocks, inner })
}

pub fn block_decode(dec: &BlockDecomposition, spec: &BlockSpec) -> Result<Permutation, MallowsError> {
    let n = spec.n();
    let m = spec.sizes.len();
    if dec.blocks.len() != m || dec.inner.len() != m {
        return Err(MallowsError::Decomposition(format!(
            "expected {m} blocks, got {} and {} inner permutations",
            dec.blocks.len(),
            dec.inner.len()
        )));
    }
    let d = spec.offsets();
    let mut vals = vec![u32::MAX; n];
    for (b, (block, inner)) in dec.blocks.iter().zip(&dec.inner).enumerate() {
        if block.len() != spec.sizes[b] || inner.len() != spec.sizes[b] {
            return Err(MallowsError::Decomposition(format!(
                "block {} has {} positions and an inner permutation of size {}, expected {}",
                b + 1,
                block.len(),
                inner.len(),
                spec.sizes[b]
            )));
        }
        if block.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MallowsError::Decomposition(format!("block {} is not sorted", b + 1)));
        }
        for (k, &pos) in block.iter().enumerate() {
            if pos == 0 || pos > n || vals[pos - 1] != u32::MAX {
                return Err(MallowsError::Decomposition(format!(
                    "position {pos} is out of range or used twice"
                )));
            }
            vals[pos - 1] = (d[b] + inner.as_zero_based()[k] as usize) as u32;
        }
    }
    Ok(Permutation::from_zero_based(vals))
}

/// Exact `μ_{n,q}` sampler through the block decomposition.
///
/// The partition variable is drawn from `P(A) ∝ q^{l(A)}` by enumerating
/// every member of `A(c)` once up front; inner permutations come from
/// [`sample`].
pub struct BlockSampler {
    spec: BlockSpec,
    q: f64,
    /// Block label per position for each member of `A(c)`.
    labelings: Vec<Vec<u8>>,
    cumulative: Vec<f64>,
}

impl BlockSampler {
    pub fn new(spec: BlockSpec, q: f64) -> Result<Self, MallowsError> {
        let n = spec.n();
        if n > BLOCK_SAMPLE_MAX_N {
            return Err(MallowsError::TooLarge { n, max: BLOCK_SAMPLE_MAX_N });
        }
        MallowsParams::new(n, q)?;
        let mut labelings = Vec::new();
        let mut remaining = spec.sizes.clone();
        let mut current = Vec::with_capacity(n);
        enumerate_labelings(&mut remaining, &mut current, n, &mut labelings);
        let m = spec.sizes.len();
        let mut cumulative = Vec::with_capacity(labelings.len());
        let mut acc = 0.0;
        for lab in &labelings {
            let labels: Vec<usize> = lab.iter().map(|&l| l as usize).collect();
            acc += q.powi(count_label_inversions(&labels, m) as i32);
            cumulative.push(acc);
        }
        Ok(Self { spec, q, labelings, cumulative })
    }

    /// `|A(c)|`.
    pub fn partition_count(&self) -> usize {
        self.labelings.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let total = *self.cumulative.last().expect("A(c) is never empty");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.labelings.len() - 1);
        let labeling = &self.labelings[idx];
        let m = self.spec.sizes.len();
        let mut blocks = vec![Vec::new(); m];
        for (pos, &l) in labeling.iter().enumerate() {
            blocks[l as usize].push(pos + 1);
        }
        let inner = self
            .spec
            .sizes
            .iter()
            .map(|&c| sample(&MallowsParams { n: c, q: self.q }, rng))
            .collect();
        block_decode(&BlockDecomposition { blocks, inner }, &self.spec)
            .expect("sampled decomposition is consistent")
    }
}

fn enumerate_labelings(remaining: &mut [usize], current: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
    if current.len() == n {
        out.push(current.clone());
        return;
    }
    for b in 0..remaining.len() {
        if remaining[b] > 0 {
            remaining[b] -= 1;
            current.push(b as u8);
            enumerate_labelings(remaining, current, n, out);
            current.pop();
            remaining[b] += 1;
        }
    }
}

/// One draw through the block decomposition. Rebuilds the partition table on
/// every call; use [`BlockSampler`] for repeated draws.
pub fn block_sample<R: Rng + ?Sized>(spec: &BlockSpec, q: f64, rng: &mut R) -> Result<Permutation, MallowsError> {
    Ok(BlockSampler::new(spec.clone(), q)?.sample(rng))
}

/// Half the L¹ distance between an empirical histogram and a pmf.
pub fn total_variation(counts: &BTreeMap<Permutation, u64>, pmf: &BTreeMap<Permutation, f64>) -> f64 {
    let total: u64 = counts.values().sum();
    let total = total.max(1) as f64;
    let mut tv = 0.0;
    for (p, &w) in pmf {
        let emp = counts.get(p).copied().unwrap_or(0) as f64 / total;
        tv += (emp - w).abs();
    }
    // mass on permutations the pmf does not list
    tv += counts
        .iter()
        .filter(|(p, _)| !pmf.contains_key(*p))
        .map(|(_, &c)| c as f64 / total)
        .sum::<f64>();
    tv / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(MallowsParams::new(0, 0.5).is_err());
        assert!(MallowsParams::new(3, 0.0).is_err());
        assert!(MallowsParams::new(3, f64::NAN).is_err());
        assert!(ScalingParams::new(2, 2.0).is_err());
        let s = ScalingParams::new(2000, 2.0).unwrap();
        assert!((s.q() - 0.999).abs() < 1e-15);
        assert!(ScalingParams::new(10, -50.0).is_ok());
    }

    #[test]
    fn exact_pmf_examples() {
        let pmf = exact_pmf(&MallowsParams::new(2, 0.5).unwrap()).unwrap();
        assert!((pmf[&p("1,2")] - 2.0 / 3.0).abs() < 1e-15);
        assert!((pmf[&p("2,1")] - 1.0 / 3.0).abs() < 1e-15);
        let pmf = exact_pmf(&MallowsParams::new(3, 1.0).unwrap()).unwrap();
        assert!(pmf.values().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
        let pmf = exact_pmf(&MallowsParams::new(1, 3.7).unwrap()).unwrap();
        assert_eq!(pmf.len(), 1);
        assert!((pmf[&p("1")] - 1.0).abs() < 1e-15);
        assert!(matches!(
            exact_pmf(&MallowsParams::new(10, 0.5).unwrap()),
            Err(MallowsError::TooLarge { .. })
        ));
    }

    #[test]
    fn partition_function_generic() {
        assert!((partition_function(3, 1.0_f64) - 6.0).abs() < 1e-12);
        assert!((partition_function(2, 0.5_f32) - 1.5).abs() < 1e-6);
        // q slightly off 1 stays close to n!
        assert!((partition_function(4, 1.0 - 1e-10_f64) - 24.0).abs() < 1e-6);
    }

    #[test]
    fn truncated_geometric_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &q in &[1e-6, 0.3, 0.999, 1.0, 1.5, 40.0] {
            for len in 1..8 {
                for _ in 0..200 {
                    assert!(truncated_geometric(q, len, &mut rng) < len);
                }
            }
        }
    }

    #[test]
    fn lehmer_decoding_preserves_inversion_count() {
        // every code in the product space decodes to a distinct permutation
        let n = 4;
        let mut seen = std::collections::BTreeSet::new();
        let mut code = vec![0usize; n];
        loop {
            let perm = decode_lehmer(&code);
            assert_eq!(perm.inversion_number(), code.iter().sum::<usize>() as u64);
            seen.insert(perm);
            let mut j = n;
            loop {
                if j == 0 {
                    assert_eq!(seen.len(), 24);
                    return;
                }
                j -= 1;
                if code[j] < j {
                    code[j] += 1;
                    break;
                }
                code[j] = 0;
            }
        }
    }

    #[test]
    fn near_zero_q_concentrates_on_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = MallowsParams::new(6, 1e-6).unwrap();
        let hits = (0..10_000).filter(|_| sample(&params, &mut rng).is_identity()).count();
        assert!(hits as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn uniform_mean_inversions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = MallowsParams::new(5, 1.0).unwrap();
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws).map(|_| sample(&params, &mut rng).inversion_number() as f64).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        // Var l(π) = n(n−1)(2n+5)/72 for the uniform measure
        let sd = (5.0 * 4.0 * 15.0 / 72.0_f64).sqrt() / (draws as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn block_examples() {
        let spec = BlockSpec::new(vec![2, 2]).unwrap();
        let dec = block_encode(&p("3,1,4,2"), &spec).unwrap();
        assert_eq!(dec.blocks, vec![vec![2, 4], vec![1, 3]]);
        assert_eq!(dec.inner, vec![p("1,2"), p("1,2")]);
        assert_eq!(dec.block_inversions(), 3);
        assert_eq!(block_decode(&dec, &spec).unwrap(), p("3,1,4,2"));

        let id = Permutation::identity(5);
        let spec = BlockSpec::new(vec![2, 1, 2]).unwrap();
        let dec = block_encode(&id, &spec).unwrap();
        assert_eq!(dec.blocks, vec![vec![1, 2], vec![3], vec![4, 5]]);
        assert!(dec.inner.iter().all(Permutation::is_identity));
        assert_eq!(dec.block_inversions(), 0);
    }

    #[test]
    fn block_errors() {
        assert!(BlockSpec::new(vec![]).is_err());
        assert!(BlockSpec::new(vec![2, 0]).is_err());
        let spec = BlockSpec::new(vec![2, 2]).unwrap();
        assert!(block_encode(&p("1,2,3"), &spec).is_err());
        let bad = BlockDecomposition {
            blocks: vec![vec![1, 1], vec![3, 4]],
            inner: vec![p("1,2"), p("1,2")],
        };
        assert!(block_decode(&bad, &spec).is_err());
        let short = BlockDecomposition { blocks: vec![vec![1, 2]], inner: vec![p("1,2")] };
        assert!(block_decode(&short, &spec).is_err());
        assert!(matches!(
            BlockSampler::new(BlockSpec::new(vec![6, 5]).unwrap(), 0.5),
            Err(MallowsError::TooLarge { .. })
        ));
    }

    #[test]
    fn single_block_and_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let whole = BlockSampler::new(BlockSpec::new(vec![5]).unwrap(), 0.7).unwrap();
        assert_eq!(whole.partition_count(), 1);
        let singles = BlockSampler::new(BlockSpec::new(vec![1; 5]).unwrap(), 0.7).unwrap();
        assert_eq!(singles.partition_count(), 120);
        for _ in 0..50 {
            assert_eq!(whole.sample(&mut rng).len(), 5);
            assert_eq!(singles.sample(&mut rng).len(), 5);
        }
    }
}
