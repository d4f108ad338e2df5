//! Scalar abstractions.
//!
//! Exact algebra (composition, margins, stationary solve, divergences) is
//! written against [`Scalar`], which is implemented for `f32`, `f64` and
//! [`BigRational`]. Anything that needs square roots, logarithms or an
//! eigensolver is written against [`Real`], the floating-point subset.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// A field element usable as a probability.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Absolute slack allowed when checking that a row sums to one.
    fn stochastic_tolerance() -> Self;

    /// Two entries closer than this are treated as tied.
    fn tie_tolerance() -> Self;

    /// Lossy conversion used by samplers and report writers.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize is representable")
    }
}

/// Floating-point scalars.
pub trait Real: Scalar + Float {}

impl Scalar for f64 {
    fn stochastic_tolerance() -> Self {
        1e-9
    }

    fn tie_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    // 1e-9 is below f32 resolution near 1.0.
    fn stochastic_tolerance() -> Self {
        1e-5
    }

    fn tie_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for BigRational {
    fn stochastic_tolerance() -> Self {
        BigRational::zero()
    }

    fn tie_tolerance() -> Self {
        BigRational::zero()
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Builds the exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a decimal literal such as `"0.125"` or `"3"` into an exact rational.
pub fn rational_from_decimal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}
