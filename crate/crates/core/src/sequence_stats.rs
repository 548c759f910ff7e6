//! Longest increasing and common subsequences.
//!
//! All notions are strict. The common-subsequence length of two
//! permutations is computed through their inverses: the positions at which
//! each symbol occurs form a planar point set, and common subsequences are
//! exactly increasing chains of that set.

use std::cmp::Ordering;

use thiserror::Error;

use crate::perm::Permutation;
use crate::scalar::{Coord, Rational};
use crate::variational::Staircase;

/// Size limit of the quadratic DP oracle.
pub const DP_ORACLE_MAX_N: usize = 4000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("n={n} exceeds the DP oracle limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("two points share the {axis}-coordinate {value}")]
    DuplicateCoordinate { axis: char, value: f64 },
    #[error("coordinate is NaN")]
    NotANumber,
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
}

/// Patience sorting: number of piles when each element goes on the leftmost
/// pile whose top is not smaller.
pub fn lis_of<T: PartialOrd + Copy>(seq: &[T]) -> usize {
    let mut tops: Vec<T> = Vec::new();
    for &v in seq {
        let k = tops.partition_point(|t| *t < v);
        if k == tops.len() {
            tops.push(v);
        } else {
            tops[k] = v;
        }
    }
    tops.len()
}

pub fn lis(p: &Permutation) -> usize {
    lis_of(p.as_zero_based())
}

pub fn lds(p: &Permutation) -> usize {
    let n = p.len() as u32;
    let flipped: Vec<u32> = p.as_zero_based().iter().map(|&v| n - 1 - v).collect();
    lis_of(&flipped)
}

/// Longest chain of indices, in any order, increasing in both `a` and `b`.
pub fn lis_pairs(a: &Permutation, b: &Permutation) -> Result<usize, StatsError> {
    check_lengths(a, b)?;
    let mut by_a = vec![0u32; a.len()];
    for (i, &v) in a.as_zero_based().iter().enumerate() {
        by_a[v as usize] = b.as_zero_based()[i];
    }
    Ok(lis_of(&by_a))
}

/// `LCS(π, τ) = LIS(π⁻¹, τ⁻¹)`, in `O(n log n)`.
pub fn lcs(p: &Permutation, t: &Permutation) -> Result<usize, StatsError> {
    check_lengths(p, t)?;
    lis_pairs(&p.inverse(), &t.inverse())
}

/// The textbook quadratic DP over one-line notations.
pub fn lcs_dp_oracle(p: &Permutation, t: &Permutation) -> Result<usize, StatsError> {
    check_lengths(p, t)?;
    if p.len() > DP_ORACLE_MAX_N {
        return Err(StatsError::TooLarge { n: p.len(), max: DP_ORACLE_MAX_N });
    }
    let (a, b) = (p.as_zero_based(), t.as_zero_based());
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len()])
}

fn check_lengths(a: &Permutation, b: &Permutation) -> Result<(), StatsError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(StatsError::LengthMismatch { left: a.len(), right: b.len() })
    }
}

/// A finite planar point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<(T, T)>,
}

impl<T: Coord> PointCloud<T> {
    pub fn new(points: Vec<(T, T)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points lying in `r`.
    pub fn restrict(&self, r: &Rectangle<T>) -> Self {
        Self::new(self.points.iter().copied().filter(|&(x, y)| r.contains(x, y)).collect())
    }

    pub fn count_in(&self, r: &Rectangle<T>) -> usize {
        self.points.iter().filter(|&&(x, y)| r.contains(x, y)).count()
    }
}

impl PointCloud<Rational> {
    /// `z(p, t) = {(p(i)/n, t(i)/n)}` with exact coordinates.
    pub fn from_permutations(p: &Permutation, t: &Permutation) -> Result<Self, StatsError> {
        check_lengths(p, t)?;
        let n = p.len() as i64;
        Ok(Self::new(
            p.as_zero_based()
                .iter()
                .zip(t.as_zero_based())
                .map(|(&a, &b)| (Rational::new(i64::from(a) + 1, n), Rational::new(i64::from(b) + 1, n)))
                .collect(),
        ))
    }

    /// `z(p⁻¹, t⁻¹)`, whose longest chain is `LCS(p, t)`.
    pub fn from_inverses(p: &Permutation, t: &Permutation) -> Result<Self, StatsError> {
        Self::from_permutations(&p.inverse(), &t.inverse())
    }
}

fn cmp<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("coordinates are not NaN")
}

/// Longest chain under the strict coordinatewise order. Rejects clouds with
/// repeated coordinates.
pub fn lis_points<T: Coord>(c: &PointCloud<T>) -> Result<usize, StatsError> {
    if c.points.iter().any(|&(x, y)| x.is_nan() || y.is_nan()) {
        return Err(StatsError::NotANumber);
    }
    let mut pts = c.points.clone();
    pts.sort_by(|a, b| cmp(&a.0, &b.0));
    if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(StatsError::DuplicateCoordinate { axis: 'x', value: w[0].0.approx() });
    }
    let mut ys: Vec<T> = pts.iter().map(|p| p.1).collect();
    let len = lis_of(&ys);
    ys.sort_by(cmp);
    if let Some(w) = ys.windows(2).find(|w| w[0] == w[1]) {
        return Err(StatsError::DuplicateCoordinate { axis: 'y', value: w[0].approx() });
    }
    Ok(len)
}

/// `(x1, x2] × (y1, y2]` inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle<T> {
    pub x1: T,
    pub x2: T,
    pub y1: T,
    pub y2: T,
}

impl<T: Coord> Rectangle<T> {
    pub fn new(x1: T, x2: T, y1: T, y2: T) -> Result<Self, StatsError> {
        let (zero, one) = (T::zero(), T::one());
        let ordered = |a: T, b: T| zero <= a && a < b && b <= one;
        if !ordered(x1, x2) {
            return Err(StatsError::InvalidRectangle(format!("need 0 <= x1 < x2 <= 1, got {x1:?}, {x2:?}")));
        }
        if !ordered(y1, y2) {
            return Err(StatsError::InvalidRectangle(format!("need 0 <= y1 < y2 <= 1, got {y1:?}, {y2:?}")));
        }
        Ok(Self { x1, x2, y1, y2 })
    }

    pub fn unit() -> Self {
        Self { x1: T::zero(), x2: T::one(), y1: T::zero(), y2: T::one() }
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        self.x1 < x && x <= self.x2 && self.y1 < y && y <= self.y2
    }

    pub fn contains_rect(&self, other: &Self) -> bool {
        self.x1 <= other.x1 && other.x2 <= self.x2 && self.y1 <= other.y1 && other.y2 <= self.y2
    }

    /// `Δx = x2 − x1`, approximately.
    pub fn width(&self) -> f64 {
        self.x2.approx() - self.x1.approx()
    }

    pub fn to_f64(&self) -> Rectangle<f64> {
        Rectangle { x1: self.x1.approx(), x2: self.x2.approx(), y1: self.y1.approx(), y2: self.y2.approx() }
    }
}

/// `l_R`: longest chain among the points of `c` inside `r`.
pub fn lis_in_rectangle<T: Coord>(c: &PointCloud<T>, r: &Rectangle<T>) -> Result<usize, StatsError> {
    lis_points(&c.restrict(r))
}

/// Longest chain confined to the staircase's rectangles
/// `R_j = ((j−1)Δx, jΔx] × (b_{j−1}Δy, (b_j+1)Δy]`.
///
/// Filtering first is enough: an increasing sequence of points that each
/// lie in some `R_j` is a staircase-increasing sequence.
pub fn lis_staircase<T: Coord>(c: &PointCloud<T>, b: &Staircase) -> Result<usize, StatsError> {
    let inside = c.points.iter().copied().filter(|&(x, y)| b.contains(x, y)).collect();
    lis_points(&PointCloud::new(inside))
}
