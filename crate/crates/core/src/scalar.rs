//! Field elements: exact rationals and binary floating point.
//!
//! Every algorithm in the crate is generic over [`Scalar`]. Exact mode uses
//! [`Rational`] and compares with `==`; float mode uses `f64` and declares a
//! value negligible relative to a caller-supplied scale.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;
use thiserror::Error;

/// Arbitrary precision rational number.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {text:?} as a {field} value")]
pub struct ScalarParseError {
    pub text: String,
    pub field: &'static str,
}

/// A field element usable as a matrix entry.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// `true` when arithmetic is exact and comparisons use `==`.
    const EXACT: bool;
    /// Name used in configs and reports.
    const FIELD_NAME: &'static str;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Absolute value as an `f64`, used only for pivot selection and tolerances.
    fn magnitude(&self) -> f64;

    fn add_ref(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self.clone() - other.clone()
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }

    fn div_ref(&self, other: &Self) -> Self {
        self.clone() / other.clone()
    }

    /// Zero test. Exact fields ignore `scale` and `tol`.
    fn is_negligible(&self, scale: f64, tol: f64) -> bool;

    fn parse_text(text: &str) -> Result<Self, ScalarParseError>;

    /// Canonical text form; rationals print as `num/den` in lowest terms.
    fn to_text(&self) -> String;

    fn to_json(&self) -> Value;

    fn from_json(value: &Value) -> Result<Self, ScalarParseError>;

    fn pow(&self, exp: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc.mul_ref(self);
        }
        acc
    }
}

fn parse_error<T: Scalar>(text: &str) -> ScalarParseError {
    ScalarParseError {
        text: text.to_string(),
        field: T::FIELD_NAME,
    }
}

fn parse_decimal_rational(text: &str) -> Option<Rational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.')?;
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Rational::new(numer, denom);
    Some(if negative { -value } else { value })
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const FIELD_NAME: &'static str = "rational";

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }

    fn is_negligible(&self, _scale: f64, _tol: f64) -> bool {
        self.is_zero()
    }

    fn parse_text(text: &str) -> Result<Self, ScalarParseError> {
        let trimmed = text.trim();
        if let Some((n, d)) = trimmed.split_once('/') {
            let numer: BigInt = n.trim().parse().map_err(|_| parse_error::<Self>(text))?;
            let denom: BigInt = d.trim().parse().map_err(|_| parse_error::<Self>(text))?;
            if denom.is_zero() {
                return Err(parse_error::<Self>(text));
            }
            return Ok(Rational::new(numer, denom));
        }
        if let Ok(int) = trimmed.parse::<BigInt>() {
            return Ok(Rational::from_integer(int));
        }
        parse_decimal_rational(trimmed).ok_or_else(|| parse_error::<Self>(text))
    }

    fn to_text(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn to_json(&self) -> Value {
        Value::String(self.to_text())
    }

    fn from_json(value: &Value) -> Result<Self, ScalarParseError> {
        match value {
            Value::String(s) => Self::parse_text(s),
            // binary floats are rejected; integers are exact
            Value::Number(n) => n
                .as_i64()
                .map(Self::from_i64)
                .ok_or_else(|| parse_error::<Self>(&n.to_string())),
            other => Err(parse_error::<Self>(&other.to_string())),
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const FIELD_NAME: &'static str = "float64";

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }

    fn is_negligible(&self, scale: f64, tol: f64) -> bool {
        self.abs() <= tol * scale
    }

    fn parse_text(text: &str) -> Result<Self, ScalarParseError> {
        let trimmed = text.trim();
        if trimmed.contains('/') {
            return Rational::parse_text(trimmed)
                .ok()
                .and_then(|r| r.to_f64())
                .ok_or_else(|| parse_error::<Self>(text));
        }
        trimmed.parse::<f64>().map_err(|_| parse_error::<Self>(text))
    }

    fn to_text(&self) -> String {
        format!("{self:e}")
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(value: &Value) -> Result<Self, ScalarParseError> {
        match value {
            Value::String(s) => Self::parse_text(s),
            Value::Number(n) => n.as_f64().ok_or_else(|| parse_error::<Self>(&n.to_string())),
            other => Err(parse_error::<Self>(&other.to_string())),
        }
    }
}

/// Binomial coefficient `C(n, k)` as a field element; zero when `k > n`.
pub fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    match i64::try_from(acc) {
        Ok(v) => T::from_i64(v),
        Err(_) => {
            // fall back to a product of ratios
            let mut out = T::one();
            for i in 0..k {
                out = out * T::from_ratio((n - i) as i64, (i + 1) as i64);
            }
            out
        }
    }
}

/// Falling factorial `n (n-1) ... (n-m+1)`.
pub fn falling_factorial<T: Scalar>(n: usize, m: usize) -> T {
    if m > n {
        return T::zero();
    }
    let mut acc = T::one();
    for i in 0..m {
        acc = acc * T::from_i64((n - i) as i64);
    }
    acc
}

/// `x0^(k-m) * C(k, m)`, the Taylor weight of `x^k` in `f^(m)(x0) / m!`.
pub fn taylor_weight<T: Scalar>(k: usize, m: usize, x0: &T) -> T {
    if m > k {
        return T::zero();
    }
    binomial::<T>(k, m).mul_ref(&x0.pow(k - m))
}
