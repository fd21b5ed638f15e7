//! Scalar backends.
//!
//! Every matrix in the crate is generic over [`Scalar`], which has two
//! implementations: [`Rational`] (arbitrary-precision, always in lowest terms)
//! and `f64`. Exact zero tests are only meaningful for the rational backend;
//! the float backend answers them through an explicit tolerance that the caller
//! supplies relative to a matrix scale.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number. `num_rational` keeps it normalized
/// (lowest terms, positive denominator) after every operation.
pub type Rational = num_rational::BigRational;

/// Tag naming the arithmetic used by a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn is_exact(self) -> bool {
        self == Backend::Exact
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

impl Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    const BACKEND: Backend;

    fn from_i64(v: i64) -> Self;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// True when `self` should be treated as zero next to magnitudes of order
    /// `scale`. Exact scalars ignore both arguments.
    fn negligible(&self, scale: f64, rel: f64) -> bool;

    /// `sum += x`, carrying the rounding error in `carry` where the backend
    /// has one (Kahan summation for `f64`).
    fn compensated_add(sum: &mut Self, carry: &mut Self, x: &Self);
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Exact;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        // ToPrimitive on BigRational handles huge numerators and denominators
        // without overflowing to inf/inf.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn negligible(&self, _scale: f64, _rel: f64) -> bool {
        self.is_zero()
    }

    fn compensated_add(sum: &mut Self, _carry: &mut Self, x: &Self) {
        *sum += x;
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn negligible(&self, scale: f64, rel: f64) -> bool {
        self.abs() <= rel * scale
    }

    fn compensated_add(sum: &mut Self, carry: &mut Self, x: &Self) {
        let y = *x - *carry;
        let t = *sum + y;
        *carry = (t - *sum) - y;
        *sum = t;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {text:?} as a rational number")]
pub struct ParseRationalError {
    pub text: String,
}

/// Parses `p/q`, integers and decimals (with optional exponent) into an exact
/// rational. Decimal text is read digit by digit, so `0.1` becomes `1/10`
/// rather than the nearest binary float.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        text: text.to_string(),
    };
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all_digits).map_err(|_| err())?);
    let shift = exponent - frac_part.len() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Exact rational value of a finite float (every finite `f64` is a dyadic
/// rational). Returns `None` for NaN and infinities.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_f64(x)
}

/// Renders a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Least common multiple of the denominators; handy when printing a rational
/// matrix as `(1/m) * integer matrix`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
