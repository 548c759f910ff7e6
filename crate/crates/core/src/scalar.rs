//! Scalar abstractions shared by the numerical and geometric modules.
//!
//! [`Real`] covers the floating-point types the density and variational code
//! is generic over. [`Coord`] covers anything that can serve as a planar
//! coordinate, including the exact rationals used for permutation clouds.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, One, ToPrimitive, Zero};

/// Floating point: `f32` or `f64`. Every `Real` is also a [`Coord`].
pub trait Real:
    Float + Coord + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Conversion from a count.
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// An exact rational coordinate.
pub type Rational = Ratio<i64>;

/// A totally comparable planar coordinate.
///
/// Floats are accepted for convenience; NaN is rejected wherever points are
/// ingested, so `partial_cmp` never returns `None` on validated data.
pub trait Coord: PartialOrd + Copy + Debug + Zero + One + Send + Sync {
    /// `ceil(self * k)` as an integer.
    fn ceil_mul(self, k: u64) -> i64;

    /// Best-effort conversion for reporting.
    fn approx(self) -> f64;

    fn is_nan(self) -> bool {
        false
    }
}

impl Coord for f64 {
    fn ceil_mul(self, k: u64) -> i64 {
        (self * k as f64).ceil() as i64
    }
    fn approx(self) -> f64 {
        self
    }
    fn is_nan(self) -> bool {
        f64::is_nan(self)
    }
}

impl Coord for f32 {
    fn ceil_mul(self, k: u64) -> i64 {
        (f64::from(self) * k as f64).ceil() as i64
    }
    fn approx(self) -> f64 {
        f64::from(self)
    }
    fn is_nan(self) -> bool {
        f32::is_nan(self)
    }
}

impl Coord for Rational {
    fn ceil_mul(self, k: u64) -> i64 {
        let k = i128::from(k);
        let num = i128::from(*self.numer()) * k;
        let den = i128::from(*self.denom());
        // denominators are kept positive by Ratio
        let q = num.div_euclid(den);
        let q = if num.rem_euclid(den) == 0 { q } else { q + 1 };
        i64::try_from(q).expect("scaled coordinate fits i64")
    }
    fn approx(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Parses a plain decimal literal (`"0.5"`, `"1"`, `"-0.25"`, `"3e-1"`) into
/// the exact rational it denotes.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut numer: i128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer.checked_mul(10)?.checked_add(i128::from(c as u8 - b'0'))?;
    }
    let scale = i32::try_from(frac_part.len()).ok()? - exp;
    let (numer, denom) = if scale >= 0 {
        (numer, 10i128.checked_pow(scale as u32)?)
    } else {
        (numer.checked_mul(10i128.checked_pow((-scale) as u32)?)?, 1)
    };
    let g = gcd(numer, denom);
    let (numer, denom) = (numer / g, denom / g);
    let numer = i64::try_from(if neg { -numer } else { numer }).ok()?;
    let denom = i64::try_from(denom).ok()?;
    Some(Ratio::new(numer, denom))
}

/// Exact rational for the shortest decimal that round-trips `x`, so that
/// `0.3_f64` becomes `3/10` rather than its binary expansion.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    parse_decimal(&format!("{x:e}"))
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_decimal("0.3"), Some(Ratio::new(3, 10)));
        assert_eq!(parse_decimal("1"), Some(Ratio::new(1, 1)));
        assert_eq!(parse_decimal("-0.25"), Some(Ratio::new(-1, 4)));
        assert_eq!(parse_decimal("3e-1"), Some(Ratio::new(3, 10)));
        assert_eq!(parse_decimal(".75"), Some(Ratio::new(3, 4)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal(""), None);
    }

    #[test]
    fn shortest_round_trip_float() {
        assert_eq!(rational_from_f64(0.3), Some(Ratio::new(3, 10)));
        assert_eq!(rational_from_f64(0.0), Some(Ratio::new(0, 1)));
        assert_eq!(rational_from_f64(f64::NAN), None);
    }

    #[test]
    fn exact_ceiling() {
        let half = Ratio::new(1, 2);
        assert_eq!(half.ceil_mul(4), 2);
        assert_eq!(half.ceil_mul(3), 2);
        assert_eq!(Ratio::new(3, 10).ceil_mul(10), 3);
        assert_eq!(Ratio::new(0, 1).ceil_mul(7), 0);
        assert_eq!(0.25_f64.ceil_mul(8), 2);
    }
}
