//! Exact non-negative rationals for profile factors and tolerances.
//!
//! Float factors would make `ceil(cost × factor)` depend on rounding
//! (`10 × 1.1` is not 11 in binary floating point), so anything that feeds
//! the cost model is kept exact.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(Rational64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number `{0}`: expected a non-negative decimal or p/q fraction")]
pub struct RatioParseError(pub String);

impl Ratio {
    pub const ZERO: Ratio = Ratio(Rational64::new_raw(0, 1));
    pub const ONE: Ratio = Ratio(Rational64::new_raw(1, 1));

    pub fn new(numer: i64, denom: i64) -> Self {
        Ratio(Rational64::new(numer, denom))
    }

    pub fn from_integer(n: i64) -> Self {
        Ratio(Rational64::from_integer(n))
    }

    pub fn inner(self) -> Rational64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        *self.0.numer() == 0
    }

    /// `ceil(n × self)` for a non-negative integer `n`.
    pub fn mul_ceil(self, n: u64) -> u64 {
        let num = i128::from(*self.0.numer()) * i128::from(n);
        let den = i128::from(*self.0.denom());
        let q = num.div_euclid(den);
        let r = num.rem_euclid(den);
        let c = if r == 0 { q } else { q + 1 };
        c.clamp(0, i128::from(u64::MAX)) as u64
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl From<u64> for Ratio {
    fn from(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }
}

impl FromStr for Ratio {
    type Err = RatioParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RatioParseError(s.to_string());
        let t = s.trim();
        if t.is_empty() || t.starts_with('-') || t.starts_with('+') {
            return Err(err());
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.parse().map_err(|_| err())?;
            let q: i64 = q.parse().map_err(|_| err())?;
            if q <= 0 {
                return Err(err());
            }
            return Ok(Ratio::new(p, q));
        }
        let (int_part, frac_part) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        let digits_ok = |d: &str| d.bytes().all(|b| b.is_ascii_digit());
        if int_part.is_empty() || !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(err());
        }
        if t.ends_with('.') || frac_part.len() > 12 {
            return Err(err());
        }
        let mut numer: i64 = int_part.parse().map_err(|_| err())?;
        let mut denom: i64 = 1;
        for b in frac_part.bytes() {
            numer = numer
                .checked_mul(10)
                .and_then(|n| n.checked_add(i64::from(b - b'0')))
                .ok_or_else(err)?;
            denom *= 10;
        }
        Ok(Ratio::new(numer, denom))
    }
}

impl fmt::Display for Ratio {
    /// Integers print bare, terminating fractions as decimals, anything else as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        if d == 1 {
            return write!(f, "{n}");
        }
        let mut rest = d;
        while rest % 2 == 0 {
            rest /= 2;
        }
        while rest % 5 == 0 {
            rest /= 5;
        }
        if rest != 1 {
            return write!(f, "{n}/{d}");
        }
        let mut scale = 1i128;
        let mut places = 0usize;
        while (scale * i128::from(n)) % i128::from(d) != 0 {
            scale *= 10;
            places += 1;
        }
        let scaled = scale * i128::from(n) / i128::from(d);
        let s = format!("{:0>width$}", scaled.abs(), width = places + 1);
        let (ip, fp) = s.split_at(s.len() - places);
        let sign = if n < 0 { "-" } else { "" };
        write!(f, "{sign}{ip}.{fp}")
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(u64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(n) => Ok(Ratio::from(n)),
        }
    }
}
