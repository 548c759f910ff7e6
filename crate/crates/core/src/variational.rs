//! The path energy `J(φ) = ∫ √(φ̇ ρ(x, φ))` and brackets for its supremum
//! `J̄` over nondecreasing paths.
//!
//! The upper bound is the staircase energy
//! `J_b = Σ √(M_i (b_i − b_{i−1} + 1) Δx Δy)` maximised over staircases by
//! dynamic programming, where `M_i` bounds `ρ` on the staircase's `i`-th
//! rectangle. The lower bound is `J` of the piecewise-linear path through the
//! optimal staircase's corners.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::density::{rho_diag_closed, DensityError, DensityField, BETA_EPS};
use crate::scalar::{Coord, Real};

/// `K·L` limit for [`jbar_grid`].
pub const MAX_CELLS: usize = 4096;
/// Limit on the `K·(KL)²` transitions of the dynamic program.
pub const MAX_DP_WORK: u128 = 1 << 32;
/// Samples per cell edge used to bound `ρ` on each cell.
pub const DEFAULT_SAMPLES: usize = 5;
pub const DEFAULT_K: usize = 64;
pub const DEFAULT_L: usize = 16;
/// Relative slack of the midpoint comparison.
pub const MIDPOINT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationalError {
    #[error("invalid path: {0}")]
    Path(String),
    #[error("invalid staircase: {0}")]
    Staircase(String),
    #[error("grid K={k}, L={l} rejected: {reason}")]
    Guard { k: usize, l: usize, reason: String },
    #[error("{0} samples per cell edge, at least 2 needed")]
    Samples(usize),
    #[error("grid resolution {0} is below 11")]
    Grid(usize),
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// A nondecreasing piecewise-linear path on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonePath<T> {
    knots: Vec<(T, T)>,
}

impl<T: Real> MonotonePath<T> {
    /// Knots with `x` strictly increasing from 0 to 1 and `y` nondecreasing
    /// in `[0, 1]`.
    pub fn new(knots: Vec<(T, T)>) -> Result<Self, VariationalError> {
        let err = |m: &str| Err(VariationalError::Path(m.to_string()));
        if knots.len() < 2 {
            return err("need at least two knots");
        }
        if knots[0].0 != T::zero() || knots[knots.len() - 1].0 != T::one() {
            return err("x must run from 0 to 1");
        }
        if knots.iter().any(|&(_, y)| !(y >= T::zero() && y <= T::one())) {
            return err("y must lie in [0, 1]");
        }
        // negated so that NaN knots are rejected
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0) {
                return err("x must be strictly increasing");
            }
            if !(w[0].1 <= w[1].1) {
                return err("y must be nondecreasing");
            }
        }
        Ok(Self { knots })
    }

    /// A path that additionally satisfies `φ(0) = 0`, `φ(1) = 1`.
    pub fn anchored(knots: Vec<(T, T)>) -> Result<Self, VariationalError> {
        let path = Self::new(knots)?;
        if !path.is_anchored() {
            return Err(VariationalError::Path("endpoints must be (0, 0) and (1, 1)".into()));
        }
        Ok(path)
    }

    /// `φ(x) = x`.
    pub fn diagonal() -> Self {
        Self { knots: vec![(T::zero(), T::zero()), (T::one(), T::one())] }
    }

    pub fn is_anchored(&self) -> bool {
        self.knots[0].1 == T::zero() && self.knots[self.knots.len() - 1].1 == T::one()
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn eval(&self, x: T) -> T {
        let k = self.knots.partition_point(|&(kx, _)| kx < x).clamp(1, self.knots.len() - 1);
        let ((x0, y0), (x1, y1)) = (self.knots[k - 1], self.knots[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// `J(φ)`, one Gauss–Legendre rule per linear segment.
pub fn j_functional<T: Real>(phi: &MonotonePath<T>, field: &DensityField<T>) -> T {
    phi.knots
        .windows(2)
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let slope = (y1 - y0) / (x1 - x0);
            if slope == T::zero() {
                return T::zero();
            }
            field.rule().integrate(x0, x1, |x| {
                let y = (y0 + slope * (x - x0)).min(T::one());
                (slope * field.rho_raw(x, y)).sqrt()
            })
        })
        .fold(T::zero(), |a, b| a + b)
}

/// `J̄` for `β = γ`:
/// `√(β / (6 sinh(β/2))) ∫ √(cosh(β/2) + 2 cosh(β(2x − 1)/2)) dx`, and 1 at 0.
pub fn jbar_closed<T: Real>(beta: T) -> T {
    if beta.abs() < T::lit(BETA_EPS) {
        return T::one();
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let prefactor = (beta / (T::lit(6.0) * (beta * half).sinh())).sqrt();
    let rule = crate::quadrature::GaussLegendre::<T>::new(crate::density::DEFAULT_NODES);
    let integral = rule.integrate(T::zero(), T::one(), |x| {
        ((beta * half).cosh() + two * (beta * (two * x - T::one()) * half).cosh()).sqrt()
    });
    prefactor * integral
}

/// `∫ √ρ(x, x) dx`, the energy of the diagonal path.
pub fn jbar_diag<T: Real>(field: &DensityField<T>) -> T {
    field.rule().integrate(T::zero(), T::one(), |x| field.rho_raw(x, x).sqrt())
}

/// `∫ √ρ(x, x) dx` from the closed-form diagonal, for `β = γ ≠ 0`.
pub fn jbar_diag_closed<T: Real>(beta: T, nodes: usize) -> Result<T, VariationalError> {
    let rule = crate::quadrature::GaussLegendre::<T>::new(nodes);
    let mut out = Ok(T::zero());
    let v = rule.integrate(T::zero(), T::one(), |x| match rho_diag_closed(x, beta) {
        Ok(r) => r.sqrt(),
        Err(e) => {
            out = Err(e);
            T::zero()
        }
    });
    out.map(|_| v).map_err(Into::into)
}

/// `b_0 = 0 ≤ b_1 ≤ … ≤ b_K = KL − 1` on the grid `Δx = 1/K`, `Δy = 1/(KL)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Staircase {
    k: usize,
    l: usize,
    b: Vec<usize>,
}

impl Staircase {
    pub fn new(k: usize, l: usize, b: Vec<usize>) -> Result<Self, VariationalError> {
        let err = |m: String| Err(VariationalError::Staircase(m));
        if k == 0 || l == 0 {
            return err(format!("K and L must be positive, got K={k}, L={l}"));
        }
        if b.len() != k + 1 {
            return err(format!("expected {} levels, got {}", k + 1, b.len()));
        }
        if b[0] != 0 || b[k] != k * l - 1 {
            return err(format!("levels must run from 0 to {}", k * l - 1));
        }
        if b.windows(2).any(|w| w[0] > w[1]) {
            return err("levels must be nondecreasing".into());
        }
        Ok(Self { k, l, b })
    }

    /// `b = (0, KL − 1, …, KL − 1)`: the first column whole, then the top row.
    /// Its rectangles do not cover the square once `K ≥ 2`.
    pub fn full(k: usize, l: usize) -> Result<Self, VariationalError> {
        let mut b = vec![k * l - 1; k + 1];
        b[0] = 0;
        Self::new(k, l, b)
    }

    /// Every staircase on the grid, in lexicographic order of `b`.
    pub fn all(k: usize, l: usize) -> Vec<Self> {
        let top = k * l - 1;
        let mut out = Vec::new();
        let mut b = vec![0; k + 1];
        b[k] = top;
        fn rec(i: usize, k: usize, top: usize, b: &mut Vec<usize>, l: usize, out: &mut Vec<Staircase>) {
            if i == k {
                out.push(Staircase { k, l, b: b.clone() });
                return;
            }
            for v in b[i - 1]..=top {
                b[i] = v;
                rec(i + 1, k, top, b, l, out);
            }
        }
        rec(1, k, top, &mut b, l, &mut out);
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn levels(&self) -> &[usize] {
        &self.b
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / (self.k * self.l) as f64
    }

    /// Whether `(x, y)` lies in some `R_j = ((j−1)Δx, jΔx] × (b_{j−1}Δy, (b_j+1)Δy]`.
    pub fn contains<C: Coord>(&self, x: C, y: C) -> bool {
        let col = x.ceil_mul(self.k as u64);
        if col < 1 || col > self.k as i64 {
            return false;
        }
        let col = col as usize;
        let level = y.ceil_mul((self.k * self.l) as u64);
        (self.b[col - 1] as i64) < level && level <= self.b[col] as i64 + 1
    }

    /// `φ_b` with `φ_b(iΔx) = b_i Δy`.
    pub fn path<T: Real>(&self) -> MonotonePath<T> {
        let (k, kl) = (T::of(self.k), T::of(self.k * self.l));
        let knots = self.b.iter().enumerate().map(|(i, &bi)| (T::of(i) / k, T::of(bi) / kl)).collect();
        MonotonePath::new(knots).expect("staircase corners form a monotone path")
    }
}

/// Certified upper bounds of `ρ` on the cells
/// `((i−1)Δx, iΔx] × (jΔy, (j+1)Δy]`.
///
/// Each bound is the largest value of `ρ` on an `s × s` sample lattice of the
/// cell, multiplied by `exp(|β| h_x/2 + |γ| h_y/2)` with `h` the lattice
/// spacing. Since `|∂ρ/∂x| ≤ |β|ρ` and `|∂ρ/∂y| ≤ |γ|ρ`, every point of the
/// cell is within that factor of its nearest sample.
#[derive(Debug, Clone)]
pub struct CellBounds<T> {
    k: usize,
    l: usize,
    /// `m[i][j]` for column `i` and level `j`, both 0-based.
    m: Vec<Vec<T>>,
}

impl<T: Real> CellBounds<T> {
    pub fn new(field: &DensityField<T>, k: usize, l: usize, samples: usize) -> Result<Self, VariationalError> {
        if k == 0 || l == 0 {
            return Err(VariationalError::Guard { k, l, reason: "K and L must be positive".into() });
        }
        if samples < 2 {
            return Err(VariationalError::Samples(samples));
        }
        let kl = k * l;
        let s1 = samples - 1;
        let hx = T::one() / T::of(k * s1);
        let hy = T::one() / T::of(kl * s1);
        let nx = k * s1 + 1;
        let ny = kl * s1 + 1;
        let (beta, gamma) = (field.beta(), field.gamma());
        let nodes: Vec<(T, T)> = field.rule().mapped(T::zero(), T::one()).collect();
        // ρ(x_g, y_h) = Σ_t [w_t u(x_g, t, β)] · u(t, y_h, γ)
        let right: Vec<Vec<T>> = nodes
            .par_iter()
            .map(|&(t, _)| (0..ny).map(|h| crate::density::u_raw(t, T::of(h) * hy, gamma)).collect())
            .collect();
        let level_max: Vec<Vec<T>> = (0..nx)
            .into_par_iter()
            .map(|g| {
                let x = T::of(g) * hx;
                let mut row = vec![T::zero(); ny];
                for (&(t, w), r) in nodes.iter().zip(&right) {
                    let a = w * crate::density::u_raw(x, t, beta);
                    for (out, &v) in row.iter_mut().zip(r) {
                        *out = *out + a * v;
                    }
                }
                (0..kl)
                    .map(|j| row[j * s1..=(j + 1) * s1].iter().fold(T::neg_infinity(), |a, &b| a.max(b)))
                    .collect()
            })
            .collect();
        let half = T::lit(0.5);
        let inflate = (beta.abs() * hx * half + gamma.abs() * hy * half).exp();
        let m = (0..k)
            .map(|i| {
                (0..kl)
                    .map(|j| {
                        let top = level_max[i * s1..=(i + 1) * s1].iter().fold(T::neg_infinity(), |a, r| a.max(r[j]));
                        top * inflate
                    })
                    .collect()
            })
            .collect();
        Ok(Self { k, l, m })
    }

    pub fn cell(&self, column: usize, level: usize) -> T {
        self.m[column][level]
    }

    /// `M_i` over levels `lo..=hi` of column `i` (1-based).
    pub fn rect_sup(&self, i: usize, lo: usize, hi: usize) -> T {
        self.m[i - 1][lo..=hi].iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }

    fn weight(&self, m: T, rise: usize) -> T {
        (m * T::of(rise + 1) / T::of(self.k * self.k * self.l)).sqrt()
    }

    /// `J_b` with these cell bounds.
    pub fn staircase_energy(&self, b: &Staircase) -> T {
        assert_eq!((b.k, b.l), (self.k, self.l), "staircase grid does not match");
        (1..=self.k).fold(T::zero(), |acc, i| {
            let (lo, hi) = (b.b[i - 1], b.b[i]);
            acc + self.weight(self.rect_sup(i, lo, hi), hi - lo)
        })
    }

    /// `max_b J_b` and a maximiser. For each `(i, b_i)` the predecessor level
    /// is scanned downward so that `M_i` is a running maximum.
    pub fn maximize(&self) -> (T, Staircase) {
        let kl = self.k * self.l;
        let mut value = vec![T::neg_infinity(); kl];
        value[0] = T::zero();
        let mut from = vec![vec![0usize; kl]; self.k + 1];
        for (i, col) in self.m.iter().enumerate().map(|(i, c)| (i + 1, c)) {
            let mut next = vec![T::neg_infinity(); kl];
            for (b, slot) in next.iter_mut().enumerate() {
                let mut run = T::neg_infinity();
                for prev in (0..=b).rev() {
                    run = run.max(col[prev]);
                    if value[prev] == T::neg_infinity() {
                        continue;
                    }
                    let v = value[prev] + self.weight(run, b - prev);
                    if v > *slot {
                        *slot = v;
                        from[i][b] = prev;
                    }
                }
            }
            value = next;
        }
        let mut b = vec![0; self.k + 1];
        b[self.k] = kl - 1;
        for i in (1..self.k).rev() {
            b[i] = from[i + 1][b[i + 1]];
        }
        (value[kl - 1], Staircase { k: self.k, l: self.l, b })
    }
}

/// Bracket on `J̄` from a `K × L` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JBracket<T> {
    pub lower: T,
    pub upper: T,
    pub k: usize,
    pub l: usize,
    pub argmax: Staircase,
}

fn guard(k: usize, l: usize) -> Result<(), VariationalError> {
    let reason = if k < 2 || l < 1 {
        "need K >= 2 and L >= 1".to_string()
    } else if k * l > MAX_CELLS {
        format!("K*L exceeds {MAX_CELLS}")
    } else if (k as u128) * ((k * l) as u128).pow(2) > MAX_DP_WORK {
        format!("K*(KL)^2 exceeds {MAX_DP_WORK}")
    } else {
        return Ok(());
    };
    Err(VariationalError::Guard { k, l, reason })
}

pub fn jbar_grid<T: Real>(field: &DensityField<T>, k: usize, l: usize) -> Result<JBracket<T>, VariationalError> {
    jbar_grid_with(field, k, l, DEFAULT_SAMPLES)
}

pub fn jbar_grid_with<T: Real>(
    field: &DensityField<T>,
    k: usize,
    l: usize,
    samples: usize,
) -> Result<JBracket<T>, VariationalError> {
    guard(k, l)?;
    let cells = CellBounds::new(field, k, l, samples)?;
    let (upper, argmax) = cells.maximize();
    let lower = j_functional(&argmax.path(), field);
    Ok(JBracket { lower, upper, k, l, argmax })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MidpointReport {
    pub holds: bool,
    /// Largest `ρ(x, y) / ρ(m, m)` seen, `m = (x + y)/2`.
    pub worst_ratio: f64,
    /// `∫ √ρ(x, x) dx`, reported when dominance holds.
    pub diagonal_value: Option<f64>,
}

/// Checks `ρ(x, y) ≤ ρ(m, m)` on a `grid × grid` lattice.
pub fn midpoint_dominance<T: Real>(field: &DensityField<T>, grid: usize) -> Result<MidpointReport, VariationalError> {
    if grid < 11 {
        return Err(VariationalError::Grid(grid));
    }
    let pt = |i: usize| T::of(i) / T::of(grid - 1);
    let worst = (0..grid)
        .into_par_iter()
        .map(|i| {
            (0..grid).fold(0.0f64, |acc, j| {
                let (x, y) = (pt(i), pt(j));
                let mid = (x + y) * T::lit(0.5);
                acc.max((field.rho_raw(x, y) / field.rho_raw(mid, mid)).approx())
            })
        })
        .reduce(|| 0.0, f64::max);
    let holds = worst <= 1.0 + MIDPOINT_SLACK;
    Ok(MidpointReport { holds, worst_ratio: worst, diagonal_value: holds.then(|| jbar_diag(field).approx()) })
}

pub fn midpoint_dominance_holds<T: Real>(field: &DensityField<T>, grid: usize) -> Result<bool, VariationalError> {
    Ok(midpoint_dominance(field, grid)?.holds)
}

/// Everything known about `J̄` for one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JbarReport {
    pub beta: f64,
    pub gamma: f64,
    pub k: usize,
    pub l: usize,
    pub closed_form: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub diagonal_value: f64,
    pub midpoint_dominance: bool,
    pub argmax: Staircase,
}

pub fn jbar_report(field: &DensityField<f64>, k: usize, l: usize) -> Result<JbarReport, VariationalError> {
    let bracket = jbar_grid(field, k, l)?;
    Ok(JbarReport {
        beta: field.beta(),
        gamma: field.gamma(),
        k,
        l,
        closed_form: field.is_symmetric().then(|| jbar_closed(field.beta())),
        lower: bracket.lower,
        upper: bracket.upper,
        diagonal_value: jbar_diag(field),
        midpoint_dominance: midpoint_dominance_holds(field, 21)?,
        argmax: bracket.argmax,
    })
}
