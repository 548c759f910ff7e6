//! A pair of Markov chains on `S_n` driven by shared randomness, targeting
//! `μ_{n,q}` and `μ_{n,q'}` for `q ≤ q'`.
//!
//! Each step draws `U` uniform on `{1, …, n−1}` and two coins, `F` with
//! heads probability `1/(1+q')` and `B` with heads probability
//! `(1+q')q/((1+q)q')`, then moves each chain by `s_U ∘ ·` or leaves it in
//! place according to the case tables below. Cases are classified by whether
//! the values `U` and `U+1` are inverted (`π⁻¹(U) > π⁻¹(U+1)`) in each chain.
//!
//! | case | X inverted | Y inverted | F heads | F tails, B heads | F tails, B tails |
//! |------|-----------|------------|---------|------------------|------------------|
//! | 1    | no        | no         | ·, ·    | X, Y             | ·, Y             |
//! | 2    | no        | yes        | ·, Y    | X, ·             | ·, ·             |
//! | 3    | yes       | yes        | X, Y    | ·, ·             | X, ·             |
//! | 4    | yes       | no         | X, ·    | ·, Y             | X, Y             |
//!
//! Each cell lists which of X and Y move; `·` stays put.
//!
//! Ordered pairs reach case 4 (for instance `X = 213`, `Y = 312`, `U = 1`),
//! so it needs a row of its own. The row used here is the unique one in
//! which each chain moves by the same rule it follows in cases 1–3: an
//! uninverted `X` moves on (tails, heads), an inverted `X` otherwise; an
//! uninverted `Y` moves on tails, an inverted `Y` on heads.
//!
//! The marginal chains are reversible with respect to the two Mallows
//! measures, and [`chain_transition_matrix`] checks that exactly. The
//! ordering `X_t ≤_L Y_t` is *not* preserved by these tables; see
//! [`census`], which counts the steps where it fails.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::mallows::{exact_pmf, total_variation, MallowsParams, EXACT_PMF_MAX_N};
use crate::perm::Permutation;

pub const TRANSITION_MATRIX_MAX_N: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("coupling needs 0 < q <= q'; got q={q}, q'={q_prime}")]
    InvalidParams { q: f64, q_prime: f64 },
    #[error("chains have sizes {x} and {y}")]
    SizeMismatch { x: usize, y: usize },
    #[error("the chains need n >= 2, got {0}")]
    TooSmall(usize),
    #[error("n={n} exceeds the limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("step {step}: X={x} is not below Y={y} in the left weak order")]
    NotDominated { step: u64, x: String, y: String },
    #[error("adjacent index {u} is outside 1..{n}")]
    BadIndex { u: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub q: f64,
    pub q_prime: f64,
}

impl CouplingParams {
    pub fn new(q: f64, q_prime: f64) -> Result<Self, CouplingError> {
        if !(q.is_finite() && q_prime.is_finite() && q > 0.0 && q <= q_prime) {
            return Err(CouplingError::InvalidParams { q, q_prime });
        }
        Ok(Self { q, q_prime })
    }

    /// Heads probability of `F`.
    pub fn p_forward(&self) -> f64 {
        1.0 / (1.0 + self.q_prime)
    }

    /// Heads probability of `B`.
    pub fn p_back(&self) -> f64 {
        ((1.0 + self.q_prime) * self.q / ((1.0 + self.q) * self.q_prime)).min(1.0)
    }
}

/// One draw of the shared randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coins {
    /// Adjacent index in `1..n`.
    pub u: usize,
    pub f_heads: bool,
    pub b_heads: bool,
}

impl Coins {
    pub fn draw<R: Rng + ?Sized>(n: usize, params: &CouplingParams, rng: &mut R) -> Self {
        Self {
            u: rng.random_range(1..n),
            f_heads: rng.random::<f64>() < params.p_forward(),
            b_heads: rng.random::<f64>() < params.p_back(),
        }
    }
}

/// Which row of the tables applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    BothUninverted,
    OnlyYInverted,
    BothInverted,
    OnlyXInverted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledState {
    pub x: Permutation,
    pub y: Permutation,
    pub t: u64,
}

impl CoupledState {
    /// `X_0 = Y_0 = id`.
    pub fn start(n: usize) -> Self {
        let id = Permutation::identity(n);
        Self { x: id.clone(), y: id, t: 0 }
    }

    pub fn new(x: Permutation, y: Permutation) -> Result<Self, CouplingError> {
        if x.len() != y.len() {
            return Err(CouplingError::SizeMismatch { x: x.len(), y: y.len() });
        }
        Ok(Self { x, y, t: 0 })
    }

    pub fn is_dominated(&self) -> bool {
        self.x.bruhat_leq(&self.y).expect("sizes checked at construction")
    }

    fn check(&self) -> Result<(), CouplingError> {
        if self.is_dominated() {
            Ok(())
        } else {
            Err(CouplingError::NotDominated {
                step: self.t,
                x: self.x.to_string(),
                y: self.y.to_string(),
            })
        }
    }
}

fn values_inverted(p: &Permutation, i: usize) -> bool {
    let inv = p.as_zero_based();
    let (mut pos_i, mut pos_next) = (usize::MAX, usize::MAX);
    for (pos, &v) in inv.iter().enumerate() {
        if v as usize == i - 1 {
            pos_i = pos;
        } else if v as usize == i {
            pos_next = pos;
        }
    }
    pos_i > pos_next
}

pub fn classify(x: &Permutation, y: &Permutation, u: usize) -> Case {
    match (values_inverted(x, u), values_inverted(y, u)) {
        (false, false) => Case::BothUninverted,
        (false, true) => Case::OnlyYInverted,
        (true, true) => Case::BothInverted,
        (true, false) => Case::OnlyXInverted,
    }
}

/// Applies the tables for fixed coins without checking the ordering.
/// Returns the case that fired.
pub fn apply_tables(x: &mut Permutation, y: &mut Permutation, coins: Coins) -> Case {
    let case = classify(x, y, coins.u);
    let (move_x, move_y) = match (case, coins.f_heads, coins.b_heads) {
        (Case::BothUninverted, true, _) => (false, false),
        (Case::BothUninverted, false, true) => (true, true),
        (Case::BothUninverted, false, false) => (false, true),
        (Case::OnlyYInverted, true, _) => (false, true),
        (Case::OnlyYInverted, false, true) => (true, false),
        (Case::OnlyYInverted, false, false) => (false, false),
        (Case::BothInverted, true, _) => (true, true),
        (Case::BothInverted, false, true) => (false, false),
        (Case::BothInverted, false, false) => (true, false),
        (Case::OnlyXInverted, true, _) => (true, false),
        (Case::OnlyXInverted, false, true) => (false, true),
        (Case::OnlyXInverted, false, false) => (true, true),
    };
    if move_x {
        *x = x.swap_values(coins.u);
    }
    if move_y {
        *y = y.swap_values(coins.u);
    }
    case
}

/// One checked step with given coins. Refuses an input that violates
/// `X ≤_L Y`, and reports an output that does.
pub fn coupled_step_with(state: &CoupledState, coins: Coins) -> Result<CoupledState, CouplingError> {
    let n = state.x.len();
    if coins.u == 0 || coins.u >= n {
        return Err(CouplingError::BadIndex { u: coins.u, n });
    }
    state.check()?;
    let mut next = state.clone();
    apply_tables(&mut next.x, &mut next.y, coins);
    next.t += 1;
    next.check()?;
    Ok(next)
}

pub fn coupled_step<R: Rng + ?Sized>(
    state: &CoupledState,
    params: &CouplingParams,
    rng: &mut R,
) -> Result<CoupledState, CouplingError> {
    let n = state.x.len();
    if n < 2 {
        return Err(CouplingError::TooSmall(n));
    }
    coupled_step_with(state, Coins::draw(n, params, rng))
}

/// Runs `steps` checked steps from `(id, id)`; stops at the first step whose
/// output leaves the left weak order.
pub fn run_coupled<R: Rng + ?Sized>(
    n: usize,
    params: &CouplingParams,
    steps: u64,
    rng: &mut R,
) -> Result<CoupledState, CouplingError> {
    let mut state = CoupledState::start(n);
    if steps > 0 && n < 2 {
        return Err(CouplingError::TooSmall(n));
    }
    for _ in 0..steps {
        state = coupled_step(&state, params, rng)?;
    }
    Ok(state)
}

/// Summary of an unchecked trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub q: f64,
    pub q_prime: f64,
    pub steps: u64,
    /// Steps after which `Inv(X_t) ⊄ Inv(Y_t)`.
    pub dominance_violations: u64,
    pub first_violation_step: Option<u64>,
    /// Steps that fell into case 4.
    pub only_x_inverted_steps: u64,
    /// Total variation between the occupation measure of `X` and `μ_{n,q}`;
    /// absent when `n` is too large to enumerate.
    pub tv_x: Option<f64>,
    pub tv_y: Option<f64>,
}

/// Runs the tables for `steps` steps from `(id, id)` without stopping on
/// violations, and measures how far the occupation measures are from the
/// targets.
pub fn census<R: Rng + ?Sized>(
    n: usize,
    params: &CouplingParams,
    steps: u64,
    rng: &mut R,
) -> Result<CouplingReport, CouplingError> {
    if n < 2 {
        return Err(CouplingError::TooSmall(n));
    }
    let mut x = Permutation::identity(n);
    let mut y = x.clone();
    let mut violations = 0;
    let mut first = None;
    let mut case4 = 0;
    let mut occ_x: BTreeMap<Permutation, u64> = BTreeMap::new();
    let mut occ_y: BTreeMap<Permutation, u64> = BTreeMap::new();
    let track = n <= EXACT_PMF_MAX_N;
    for t in 1..=steps {
        let coins = Coins::draw(n, params, rng);
        if apply_tables(&mut x, &mut y, coins) == Case::OnlyXInverted {
            case4 += 1;
        }
        if !x.bruhat_leq(&y).expect("equal sizes") {
            violations += 1;
            first.get_or_insert(t);
        }
        if track {
            *occ_x.entry(x.clone()).or_default() += 1;
            *occ_y.entry(y.clone()).or_default() += 1;
        }
    }
    let (tv_x, tv_y) = if track && steps > 0 {
        let px = exact_pmf(&MallowsParams { n, q: params.q }).expect("n within limit");
        let py = exact_pmf(&MallowsParams { n, q: params.q_prime }).expect("n within limit");
        (Some(total_variation(&occ_x, &px)), Some(total_variation(&occ_y, &py)))
    } else {
        (None, None)
    };
    Ok(CouplingReport {
        n,
        q: params.q,
        q_prime: params.q_prime,
        steps,
        dominance_violations: violations,
        first_violation_step: first,
        only_x_inverted_steps: case4,
        tv_x,
        tv_y,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chain {
    X,
    Y,
}

/// Exact marginal transition matrix of one chain, rows and columns indexed
/// by `Permutation::all(n)` (returned alongside).
///
/// Built by running the tables on the diagonal pair `(π, π)` for every
/// `(U, F, B)` outcome: each chain's move depends only on its own state, so
/// this is the marginal kernel.
pub fn chain_transition_matrix(
    n: usize,
    q: f64,
    q_prime: f64,
    which: Chain,
) -> Result<(Vec<Permutation>, Vec<Vec<f64>>), CouplingError> {
    if n > TRANSITION_MATRIX_MAX_N {
        return Err(CouplingError::TooLarge { n, max: TRANSITION_MATRIX_MAX_N });
    }
    if n < 2 {
        return Err(CouplingError::TooSmall(n));
    }
    let params = CouplingParams::new(q, q_prime)?;
    let states: Vec<Permutation> = Permutation::all(n).collect();
    let index: BTreeMap<&Permutation, usize> = states.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let (pf, pb) = (params.p_forward(), params.p_back());
    let outcomes = [
        (true, true, pf * pb),
        (true, false, pf * (1.0 - pb)),
        (false, true, (1.0 - pf) * pb),
        (false, false, (1.0 - pf) * (1.0 - pb)),
    ];
    let pu = 1.0 / (n - 1) as f64;
    let mut matrix = vec![vec![0.0; states.len()]; states.len()];
    for (row, p) in states.iter().enumerate() {
        for u in 1..n {
            for &(f_heads, b_heads, w) in &outcomes {
                let (mut x, mut y) = (p.clone(), p.clone());
                apply_tables(&mut x, &mut y, Coins { u, f_heads, b_heads });
                let to = match which {
                    Chain::X => x,
                    Chain::Y => y,
                };
                matrix[row][index[&to]] += pu * w;
            }
        }
    }
    Ok((states, matrix))
}
