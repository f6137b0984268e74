//! Scalar abstractions.
//!
//! Witness algebra and the classical enumeration only need an ordered ring
//! with division by two, so they are generic over [`Scalar`], which exact
//! rationals implement. Anything that takes square roots or diagonalizes a
//! matrix needs [`Real`], implemented by `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered field element used for witness coefficients and probabilities.
pub trait Scalar:
    Num + Neg<Output = Self> + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// `false` for NaN or infinite floats; always `true` for exact types.
    fn finite(&self) -> bool;

    /// Absolute value, named to avoid clashing with `Float::abs`.
    fn magnitude(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    /// Parses a decimal literal such as `-0.125` or `3`. Exact types keep
    /// the value exactly.
    fn parse_decimal(text: &str) -> Option<Self>;

    /// Converts an `f64` constant, panicking only if the type cannot
    /// represent finite doubles at all.
    fn constant(x: f64) -> Self {
        Self::from_f64(x).expect("scalar type cannot represent an f64 constant")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Smallest meaningful relative difference; zero for exact types.
    fn resolution() -> Self {
        Self::zero()
    }

    /// `base`, raised to what the type can actually resolve.
    fn tolerance(base: f64) -> Self {
        let floor = Self::resolution() * Self::constant(64.0);
        let base = Self::constant(base);
        if base > floor {
            base
        } else {
            floor
        }
    }
}

/// Floating-point scalar: everything [`Scalar`] offers plus `Float`.
pub trait Real: Scalar + Float {
    /// Shorthand for [`Scalar::tolerance`].
    fn tol(base: f64) -> Self {
        <Self as Scalar>::tolerance(base)
    }
}

impl<T> Real for T where T: Scalar + Float {}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn finite(&self) -> bool {
                self.is_finite()
            }

            fn parse_decimal(text: &str) -> Option<Self> {
                text.trim().parse::<$t>().ok().filter(|v| v.is_finite())
            }

            fn resolution() -> Self {
                <$t>::EPSILON
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Ratio<i64> {
    fn finite(&self) -> bool {
        true
    }

    fn parse_decimal(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num: i64 = num.trim().parse().ok()?;
            let den: i64 = den.trim().parse().ok()?;
            return (den != 0).then(|| Ratio::new(num, den));
        }
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: i64 = digits.parse().ok()?;
        let denom = 10i64.checked_pow(frac_part.len() as u32)?;
        let value = Ratio::new(numer, denom);
        Some(if negative { -value } else { value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn rational_decimals_are_exact() {
        assert_eq!(Rational64::parse_decimal("-0.125"), Some(Rational64::new(-1, 8)));
        assert_eq!(Rational64::parse_decimal("3"), Some(Rational64::from_integer(3)));
        assert_eq!(Rational64::parse_decimal(".5"), Some(Rational64::new(1, 2)));
        assert_eq!(Rational64::parse_decimal("2/6"), Some(Rational64::new(1, 3)));
        assert_eq!(Rational64::parse_decimal("1e3"), None);
        assert_eq!(Rational64::parse_decimal("-"), None);
    }

    #[test]
    fn float_parse_rejects_non_finite() {
        assert_eq!(f64::parse_decimal("inf"), None);
        assert_eq!(f64::parse_decimal("NaN"), None);
        assert_eq!(f64::parse_decimal(" 1.5 "), Some(1.5));
    }

    #[test]
    fn tolerance_floor_tracks_precision() {
        assert_eq!(<f64 as Real>::tol(1e-9), 1e-9);
        assert!(<f32 as Real>::tol(1e-12) > 1e-6);
    }
}
