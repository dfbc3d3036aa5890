//! Numeric backends.
//!
//! Every probabilistic object in the crate is generic over a [`Scalar`]. Two
//! implementations are provided: `f64` for randomized suites and
//! [`BigRational`] for exact reproduction of hand-computed examples.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational;

/// Arithmetic needed by kernels, distributions and Bayesian inversion.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic is exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self;

    /// Converts a float. Rationals take the shortest decimal representation
    /// of `v`, so `0.1` becomes `1/10` rather than its binary expansion.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    /// Parses `"3/10"`, `"0.3"`, `"-2"` or `"1e-3"`.
    fn parse(text: &str) -> Option<Self>;

    /// Human-readable rendering: 17 significant digits for floats, `p/q`
    /// for rationals.
    fn render(&self) -> String;

    /// `|self - other| <= tol`, evaluated in `f64` after an exact subtraction.
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self.clone() - other.clone()).abs().to_f64() <= tol
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().ok()?;
                let d: f64 = d.trim().parse().ok()?;
                (d != 0.0).then(|| n / d)
            }
            None => text.parse().ok().filter(|v: &f64| v.is_finite()),
        }
    }

    fn render(&self) -> String {
        format_sig17(*self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        parse_decimal(&format!("{v}"))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => {
                let n = parse_decimal(n.trim())?;
                let d = parse_decimal(d.trim())?;
                (!d.is_zero()).then(|| n / d)
            }
            None => parse_decimal(text),
        }
    }

    fn render(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

/// Formats a float with 17 significant digits in scientific notation, the
/// shortest fixed width that round-trips every `f64`.
pub fn format_sig17(v: f64) -> String {
    if v == 0.0 {
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// Exact parse of a decimal literal with optional exponent.
fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}
