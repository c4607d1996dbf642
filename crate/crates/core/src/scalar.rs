//! Exact rational scalars and their textual form.
//!
//! Every quantity in the engine (prices, positions, payoffs, breakpoints) is a
//! [`Scalar`]. The textual form is `"p/q"` (or `"p"` for integers), which is
//! exactly what [`BigRational`]'s `Display` produces, so printing and parsing
//! round-trip bit for bit.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Scalar = BigRational;

/// `n / d` as a scalar. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn zero() -> Scalar {
    Scalar::zero()
}

pub fn one() -> Scalar {
    Scalar::one()
}

/// Positive part `a^+`.
pub fn pos_part(a: &Scalar) -> Scalar {
    if a.is_positive() {
        a.clone()
    } else {
        zero()
    }
}

/// Negative part `a^- = -min(a, 0)`.
pub fn neg_part(a: &Scalar) -> Scalar {
    if a.is_negative() {
        -a.clone()
    } else {
        zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseScalarError(pub String);

impl fmt::Display for ParseScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal `{}`", self.0)
    }
}

impl std::error::Error for ParseScalarError {}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-2.125"`.
pub fn parse_scalar(text: &str) -> Result<Scalar, ParseScalarError> {
    let s = text.trim();
    let err = || ParseScalarError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && digits.is_empty() {
            return Err(err());
        }
        if !frac.chars().all(|c| c.is_ascii_digit()) || !digits.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let mantissa = format!("{digits}{frac}");
        let mantissa = if mantissa.is_empty() {
            "0".to_string()
        } else {
            mantissa
        };
        let mut num = BigInt::from_str(&mantissa).map_err(|_| err())?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(BigRational::new(num, den));
    }
    let n = BigInt::from_str(s).map_err(|_| err())?;
    Ok(BigRational::from_integer(n))
}

pub fn format_scalar(x: &Scalar) -> String {
    x.to_string()
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Decimal approximation with `digits` fractional digits, rounded half away
/// from zero. Exact arithmetic until the final string.
pub fn to_decimal(x: &Scalar, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = x * BigRational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded.is_negative();
    let abs = rounded.abs().to_string();
    let body = if digits == 0 {
        abs
    } else {
        let padded = format!("{:0>width$}", abs, width = digits + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - digits);
        format!("{int_part}.{frac_part}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Lenient wire form for rationals: `"p/q"` strings, `["p","q"]` pairs or
/// plain JSON integers. Always written back as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rat(pub Scalar);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_scalar(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Text(String),
            Pair(String, String),
            Int(i64),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Text(s) => parse_scalar(&s).map(Rat).map_err(serde::de::Error::custom),
            Wire::Pair(n, d) => parse_scalar(&format!("{n}/{d}"))
                .map(Rat)
                .map_err(serde::de::Error::custom),
            Wire::Int(n) => Ok(Rat(int(n))),
        }
    }
}

impl From<Scalar> for Rat {
    fn from(x: Scalar) -> Self {
        Rat(x)
    }
}

impl From<&Scalar> for Rat {
    fn from(x: &Scalar) -> Self {
        Rat(x.clone())
    }
}
