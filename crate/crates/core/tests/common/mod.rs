//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mallows_lcs::Permutation;

/// Longest strictly increasing subsequence by trying every subset.
pub fn lis_brute(seq: &[usize]) -> usize {
    assert!(seq.len() <= 20);
    let mut best = 0;
    for mask in 0u32..(1 << seq.len()) {
        let chosen: Vec<usize> = (0..seq.len()).filter(|&i| mask >> i & 1 == 1).map(|i| seq[i]).collect();
        if chosen.windows(2).all(|w| w[0] < w[1]) {
            best = best.max(chosen.len());
        }
    }
    best
}

/// Inversion number by counting pairs.
pub fn inversions_brute(p: &Permutation) -> u64 {
    let v = p.one_line();
    let mut c = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                c += 1;
            }
        }
    }
    c
}

/// `Z_{n,q}` by summing `q^{l(π)}` over `S_n`.
pub fn partition_brute(n: usize, q: f64) -> f64 {
    Permutation::all(n).map(|p| q.powi(inversions_brute(&p) as i32)).sum()
}

/// Mallows pmf normalised by the brute-force partition function.
pub fn pmf_brute(n: usize, q: f64) -> BTreeMap<Permutation, f64> {
    let z = partition_brute(n, q);
    Permutation::all(n).map(|p| {
        let w = q.powi(inversions_brute(&p) as i32) / z;
        (p, w)
    }).collect()
}

/// Composite Simpson rule with `m` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, m: usize, f: F) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
