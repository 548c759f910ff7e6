//! Limit densities of the Mallows point clouds.
//!
//! `u(x, y, β)` is the density of a single permutation's cloud in the
//! scaling regime `n(1 − q) → β`, and `ρ(x, y) = ∫ u(x, t, β) u(t, y, γ) dt`
//! that of the pair. Both are doubly stochastic on the unit square.

use num_traits::Float;
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::GaussLegendre;
use crate::scalar::Real;
use crate::sequence_stats::Rectangle;

/// Below this `|β|` the formulas switch to their `β → 0` limits.
pub const BETA_EPS: f64 = 1e-6;
/// Past this `|β|`, `u` is evaluated in log space.
pub const LOG_SPACE_BETA: f64 = 30.0;
pub const DEFAULT_NODES: usize = 256;
pub const MIN_NODES: usize = 16;
/// Accuracy is only claimed for `|β|, |γ|` up to this.
pub const SUPPORTED_BETA: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("point ({x}, {y}) is outside the unit square")]
    Domain { x: f64, y: f64 },
    #[error("parameter {0} is not finite")]
    NonFinite(f64),
    #[error("{nodes} quadrature nodes requested, at least {min} needed")]
    TooFewNodes { nodes: usize, min: usize },
    #[error("|beta| = {0} is below the small-beta cutoff; the limit value is 1")]
    SmallBeta(f64),
    #[error("grid resolution {0} is below 11")]
    Grid(usize),
}

fn check_point<T: Real>(x: T, y: T) -> Result<(), DensityError> {
    let unit = |v: T| v >= T::zero() && v <= T::one();
    if unit(x) && unit(y) {
        Ok(())
    } else {
        Err(DensityError::Domain { x: x.approx(), y: y.approx() })
    }
}

fn check_param<T: Real>(beta: T) -> Result<(), DensityError> {
    if Float::is_finite(beta) {
        Ok(())
    } else {
        Err(DensityError::NonFinite(beta.approx()))
    }
}

/// `u(x, y, β)`.
pub fn u<T: Real>(x: T, y: T, beta: T) -> Result<T, DensityError> {
    check_param(beta)?;
    check_point(x, y)?;
    Ok(u_raw(x, y, beta))
}

/// `ln |e^z − 1|`, finite for `z ≠ 0`.
fn ln_abs_expm1<T: Real>(z: T) -> T {
    if z > T::one() {
        z + (-(-z).exp_m1()).ln()
    } else if z > T::zero() {
        z.exp_m1().ln()
    } else {
        (-z.exp_m1()).ln()
    }
}

/// `u` without domain checks. Written as `β(e^β − 1)/D²` with
/// `D = e^{βs/2}(e^{β(1−y)} − 1) + e^{−βs/2}(e^{βy} − 1)`, `s = x + y − 1`;
/// both terms of `D` share the sign of `β`, so nothing cancels.
pub(crate) fn u_raw<T: Real>(x: T, y: T, beta: T) -> T {
    let ab = beta.abs();
    if ab < T::lit(BETA_EPS) {
        return T::one();
    }
    let half = T::lit(0.5);
    let s = x + y - T::one();
    if ab <= T::lit(LOG_SPACE_BETA) {
        let d = (beta * s * half).exp() * (beta * (T::one() - y)).exp_m1()
            + (-beta * s * half).exp() * (beta * y).exp_m1();
        return beta * beta.exp_m1() / (d * d);
    }
    let a = beta * s * half + ln_abs_expm1(beta * (T::one() - y));
    let b = -beta * s * half + ln_abs_expm1(beta * y);
    let hi = a.max(b);
    let ln_d = hi + ((a - hi).exp() + (b - hi).exp()).ln();
    (ab.ln() + ln_abs_expm1(beta) - T::lit(2.0) * ln_d).exp()
}

/// `(e^{−|β|}, e^{|β|})`, the pointwise range of `u`.
pub fn u_range<T: Real>(beta: T) -> (T, T) {
    let e = beta.abs().exp();
    (e.recip(), e)
}

/// The pair density, with quadrature precomputed.
#[derive(Debug, Clone)]
pub struct DensityField<T> {
    beta: T,
    gamma: T,
    rule: GaussLegendre<T>,
}

impl<T: Real> DensityField<T> {
    pub fn new(beta: T, gamma: T) -> Result<Self, DensityError> {
        Self::with_nodes(beta, gamma, DEFAULT_NODES)
    }

    pub fn with_nodes(beta: T, gamma: T, nodes: usize) -> Result<Self, DensityError> {
        check_param(beta)?;
        check_param(gamma)?;
        if nodes < MIN_NODES {
            return Err(DensityError::TooFewNodes { nodes, min: MIN_NODES });
        }
        Ok(Self { beta, gamma, rule: GaussLegendre::new(nodes) })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    pub fn rule(&self) -> &GaussLegendre<T> {
        &self.rule
    }

    /// `β = γ`, up to the small-β cutoff.
    pub fn is_symmetric(&self) -> bool {
        (self.beta - self.gamma).abs() < T::lit(BETA_EPS)
    }

    /// `(e^{−|β|−|γ|}, e^{|β|+|γ|})`, the pointwise range of `ρ`.
    pub fn rho_range(&self) -> (T, T) {
        u_range(self.beta.abs() + self.gamma.abs())
    }

    pub fn rho(&self, x: T, y: T) -> Result<T, DensityError> {
        check_point(x, y)?;
        Ok(self.rho_raw(x, y))
    }

    /// Both parameters below the small-β cutoff, so `ρ ≡ 1`.
    pub fn is_flat(&self) -> bool {
        let eps = T::lit(BETA_EPS);
        self.beta.abs() < eps && self.gamma.abs() < eps
    }

    pub(crate) fn rho_raw(&self, x: T, y: T) -> T {
        if self.is_flat() {
            return T::one();
        }
        self.rule
            .integrate(T::zero(), T::one(), |t| u_raw(x, t, self.beta) * u_raw(t, y, self.gamma))
    }

    /// `ρ(R) = ∫ [∫_{x1}^{x2} u(x, t, β) dx] [∫_{y1}^{y2} u(t, y, γ) dy] dt`.
    pub fn rho_rect(&self, r: &Rectangle<T>) -> T {
        if self.is_flat() {
            return (r.x2 - r.x1) * (r.y2 - r.y1);
        }
        self.rule.integrate(T::zero(), T::one(), |t| {
            let left = self.rule.integrate(r.x1, r.x2, |x| u_raw(x, t, self.beta));
            let right = self.rule.integrate(r.y1, r.y2, |y| u_raw(t, y, self.gamma));
            left * right
        })
    }
}

/// `ρ(x, x)` for `β = γ`:
/// `β(cosh(β/2) + 2 cosh(β(2x − 1)/2)) / (6 sinh(β/2))`.
pub fn rho_diag_closed<T: Real>(x: T, beta: T) -> Result<T, DensityError> {
    check_param(beta)?;
    check_point(x, x)?;
    if beta.abs() < T::lit(BETA_EPS) {
        return Err(DensityError::SmallBeta(beta.approx()));
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let num = (beta * half).cosh() + two * (beta * (two * x - T::one()) * half).cosh();
    Ok(beta * num / (T::lit(6.0) * (beta * half).sinh()))
}

/// Largest finite-difference partials seen on a grid, against an analytic
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialBoundsReport {
    pub max_dx: f64,
    pub max_dy: f64,
    pub bound: f64,
    pub passes: bool,
}

const BOUND_SLACK: f64 = 1e-3;

/// Largest `|∂f/∂x|`, `|∂f/∂y|` over a `grid × grid` lattice: central
/// differences inside, second-order one-sided differences on the edges.
fn max_partials<T: Real, F: Fn(T, T) -> T + Sync>(grid: usize, f: F) -> (f64, f64) {
    let h = 1.0 / (grid - 1) as f64;
    let pt = |i: usize| T::lit(i as f64 * h);
    let diff = |i: usize, g: &dyn Fn(usize) -> f64| -> f64 {
        if i == 0 {
            (-3.0 * g(0) + 4.0 * g(1) - g(2)) / (2.0 * h)
        } else if i == grid - 1 {
            (3.0 * g(grid - 1) - 4.0 * g(grid - 2) + g(grid - 3)) / (2.0 * h)
        } else {
            (g(i + 1) - g(i - 1)) / (2.0 * h)
        }
    };
    let vals: Vec<Vec<f64>> =
        (0..grid).map(|i| (0..grid).map(|j| f(pt(i), pt(j)).approx()).collect()).collect();
    let (mut mx, mut my) = (0.0f64, 0.0f64);
    for i in 0..grid {
        for j in 0..grid {
            mx = mx.max(diff(i, &|k| vals[k][j]).abs());
            my = my.max(diff(j, &|k| vals[i][k]).abs());
        }
    }
    (mx, my)
}

/// Partials of `u` against `|β| e^{|β|}`.
pub fn u_partial_bounds_check<T: Real>(beta: T, grid: usize) -> Result<PartialBoundsReport, DensityError> {
    check_param(beta)?;
    if grid < 11 {
        return Err(DensityError::Grid(grid));
    }
    let (max_dx, max_dy) = max_partials(grid, |x, y| u_raw(x, y, beta));
    let b = beta.abs().approx();
    Ok(report(max_dx, max_dy, b * b.exp()))
}

/// Partials of `ρ` against `(|β| + |γ|) e^{|β|+|γ|}`.
pub fn rho_partial_bounds_check<T: Real>(
    field: &DensityField<T>,
    grid: usize,
) -> Result<PartialBoundsReport, DensityError> {
    if grid < 11 {
        return Err(DensityError::Grid(grid));
    }
    let (max_dx, max_dy) = max_partials(grid, |x, y| field.rho_raw(x, y));
    let s = field.beta.abs().approx() + field.gamma.abs().approx();
    Ok(report(max_dx, max_dy, s * s.exp()))
}

fn report(max_dx: f64, max_dy: f64, bound: f64) -> PartialBoundsReport {
    let limit = bound * (1.0 + BOUND_SLACK);
    PartialBoundsReport { max_dx, max_dy, bound, passes: max_dx <= limit && max_dy <= limit }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The textbook form `(β/2) sinh(β/2) / (e^{β/4} cosh(β(x−y)/2) − e^{−β/4} cosh(β(x+y−1)/2))²`.
    fn u_textbook(x: f64, y: f64, b: f64) -> f64 {
        let den = (b / 4.0).exp() * (b * (x - y) / 2.0).cosh() - (-b / 4.0).exp() * (b * (x + y - 1.0) / 2.0).cosh();
        (b / 2.0) * (b / 2.0).sinh() / (den * den)
    }

    #[test]
    fn matches_textbook_form() {
        for &b in &[-7.0, -1.0, 0.3, 2.0, 5.0, 12.0] {
            for i in 0..=10 {
                for j in 0..=10 {
                    let (x, y) = (i as f64 / 10.0, j as f64 / 10.0);
                    let (a, e) = (u_raw(x, y, b), u_textbook(x, y, b));
                    assert!((a - e).abs() <= 1e-9 * e, "β={b} x={x} y={y}: {a} vs {e}");
                }
            }
        }
    }

    #[test]
    fn log_space_branch_is_continuous() {
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.8), (1.0, 0.0), (0.5, 0.5), (1.0, 1.0)] {
            let below = u_raw(x, y, 30.0 - 1e-9);
            let above = u_raw(x, y, 30.0 + 1e-9);
            assert!((below - above).abs() <= 1e-6 * below);
            let below = u_raw(x, y, -30.0 + 1e-9);
            let above = u_raw(x, y, -30.0 - 1e-9);
            assert!((below - above).abs() <= 1e-6 * below);
        }
        let (lo, hi) = u_range(45.0);
        for i in 0..=20 {
            for j in 0..=20 {
                let v = u_raw(i as f64 / 20.0, j as f64 / 20.0, 45.0);
                assert!(v.is_finite() && v >= lo && v <= hi);
            }
        }
    }

    #[test]
    fn point_values() {
        assert_eq!(u(0.2, 0.9, 0.0).unwrap(), 1.0);
        let e = 1f64.exp();
        assert!((u(1.0, 0.0, 1.0).unwrap() - 1.0 / (e - 1.0)).abs() < 1e-12);
        assert!((u(1.0, 0.0, 1.0).unwrap() - 0.581977).abs() < 1e-6);
        let b = 3.0;
        for &y in &[0.0, 0.25, 1.0] {
            let expect = b * (b * y).exp() / (b.exp() - 1.0);
            assert!((u(1.0, y, b).unwrap() - expect).abs() < 1e-12 * expect);
        }
        assert!(u(1.5, 0.0, 1.0).is_err());
        assert!(u(0.5, 0.5, f64::NAN).is_err());
        assert!((u(0.25f32, 0.75, 2.0).unwrap() - u(0.25, 0.75, 2.0f64).unwrap() as f32).abs() < 1e-5);
    }

    #[test]
    fn symmetric_in_its_arguments() {
        for &b in &[-3.0, 1.0, 5.0] {
            for i in 0..=20 {
                for j in 0..=20 {
                    let (x, y) = (i as f64 / 20.0, j as f64 / 20.0);
                    let (a, c) = (u_raw(x, y, b), u_raw(y, x, b));
                    assert!((a - c).abs() <= 1e-12 * a);
                }
            }
        }
    }

    #[test]
    fn field_values() {
        let flat = DensityField::new(0.0, 0.0).unwrap();
        assert_eq!(flat.rho(0.3, 0.6).unwrap(), 1.0);
        let f = DensityField::new(2.0, 2.0).unwrap();
        let closed = rho_diag_closed(0.5, 2.0).unwrap();
        assert!((f.rho(0.5, 0.5).unwrap() - closed).abs() < 1e-8);
        assert!((rho_diag_closed(0.0, 2.0).unwrap() - 1f64.cosh() / 1f64.sinh()).abs() < 1e-12);
        assert!((rho_diag_closed(0.0, 2.0).unwrap() - 1.313035).abs() < 1e-6);
        assert!(matches!(rho_diag_closed(0.5, 0.0), Err(DensityError::SmallBeta(_))));
        assert!(DensityField::with_nodes(1.0, 1.0, 8).is_err());
        assert!(f.rho(-0.1, 0.5).is_err());
    }

    #[test]
    fn rectangle_masses() {
        let f = DensityField::new(1.0, -2.0).unwrap();
        assert!((f.rho_rect(&Rectangle::unit()) - 1.0).abs() < 1e-8);
        let flat = DensityField::new(0.0, 0.0).unwrap();
        let r = Rectangle::new(0.0, 0.3, 0.0, 0.7).unwrap();
        assert!((flat.rho_rect(&r) - 0.21).abs() < 1e-12);
        let thin = Rectangle::new(0.4, 0.4 + 1e-6, 0.0, 1.0).unwrap();
        assert!(f.rho_rect(&thin) <= 1e-6 * 3f64.exp());
    }

    #[test]
    fn partial_bounds() {
        let r = u_partial_bounds_check(0.0, 11).unwrap();
        assert_eq!((r.max_dx, r.max_dy, r.bound), (0.0, 0.0, 0.0));
        assert!(r.passes);
        let r = u_partial_bounds_check(1.0, 51).unwrap();
        assert!(r.passes && (r.bound - 1f64.exp()).abs() < 1e-15);
        assert!(u_partial_bounds_check(1.0, 10).is_err());
        let f = DensityField::with_nodes(1.0, 2.0, 64).unwrap();
        assert!(rho_partial_bounds_check(&f, 21).unwrap().passes);
    }
}
