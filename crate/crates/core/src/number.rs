//! Exact decimal quantities.
//!
//! Data parameters are stored as base-10 decimals so that values written in a
//! model print back unchanged and convert to integer microseconds without any
//! floating point rounding.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of fractional digits a [`Number`] may carry.
pub const MAX_SCALE: u32 = 18;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumberError {
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("number `{0}` is out of range")]
    OutOfRange(String),
    #[error("{0} is not a whole number of microseconds")]
    NotMicrosecondExact(Number),
    #[error("negative duration {0}")]
    Negative(Number),
}

/// `mantissa / 10^scale`, normalized so the mantissa has no trailing zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Number {
    mantissa: i64,
    scale: u32,
}

impl Number {
    pub const ZERO: Number = Number { mantissa: 0, scale: 0 };

    pub fn new(mantissa: i64, scale: u32) -> Result<Number, NumberError> {
        if scale > MAX_SCALE {
            return Err(NumberError::OutOfRange(format!("{mantissa}e-{scale}")));
        }
        let mut n = Number { mantissa, scale };
        while n.scale > 0 && n.mantissa % 10 == 0 {
            n.mantissa /= 10;
            n.scale -= 1;
        }
        Ok(n)
    }

    pub fn from_int(v: i64) -> Number {
        Number { mantissa: v, scale: 0 }
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa < 0
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    /// Value scaled to `10^-target_scale` units, as an exact integer.
    pub fn scaled_to(&self, target_scale: u32) -> Option<i128> {
        if self.scale > target_scale {
            return None;
        }
        10i128
            .checked_pow(target_scale - self.scale)
            .and_then(|f| (self.mantissa as i128).checked_mul(f))
    }

    /// Interprets the number as seconds and converts to whole microseconds.
    pub fn seconds_to_micros(&self) -> Result<u64, NumberError> {
        if self.is_negative() {
            return Err(NumberError::Negative(*self));
        }
        let us = self.scaled_to(6).ok_or(NumberError::NotMicrosecondExact(*self))?;
        u64::try_from(us).map_err(|_| NumberError::OutOfRange(self.to_string()))
    }

    /// Non-negative whole number, for counts and capacities.
    pub fn to_count(&self) -> Option<u64> {
        if self.scale == 0 && self.mantissa >= 0 {
            Some(self.mantissa as u64)
        } else {
            None
        }
    }

    fn common(a: &Number, b: &Number) -> (i128, i128) {
        let s = a.scale.max(b.scale);
        // Both fit: |mantissa| < 2^63 and 10^18 < 2^60.
        (a.scaled_to(s).unwrap(), b.scaled_to(s).unwrap())
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = Number::common(self, other);
        a.cmp(&b)
    }
}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let neg = self.mantissa < 0;
        let abs = self.mantissa.unsigned_abs();
        let pow = 10u64.pow(self.scale);
        let int = abs / pow;
        let frac = abs % pow;
        if neg {
            f.write_str("-")?;
        }
        write!(f, "{int}.{frac:0width$}", width = self.scale as usize)
    }
}

impl FromStr for Number {
    type Err = NumberError;

    fn from_str(s: &str) -> Result<Number, NumberError> {
        let malformed = || NumberError::Malformed(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        if body.contains('.') && (frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit())) {
            return Err(malformed());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() as u32 > MAX_SCALE {
            return Err(NumberError::OutOfRange(s.to_string()));
        }
        let digits = format!("{int}{frac}");
        let mut mantissa: i64 = digits.parse().map_err(|_| NumberError::OutOfRange(s.to_string()))?;
        if neg {
            mantissa = -mantissa;
        }
        Number::new(mantissa, frac.len() as u32)
    }
}

/// Unit tag carried by numeric data parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Unit {
    None,
    Meter,
    MeterPerSecond,
    Second,
    Count,
}

impl Unit {
    pub fn symbol(&self) -> Option<&'static str> {
        match self {
            Unit::None => None,
            Unit::Meter => Some("m"),
            Unit::MeterPerSecond => Some("m/s"),
            Unit::Second => Some("s"),
            Unit::Count => Some("count"),
        }
    }

    pub fn from_symbol(s: &str) -> Option<Unit> {
        Some(match s {
            "m" => Unit::Meter,
            "m/s" => Unit::MeterPerSecond,
            "s" => Unit::Second,
            "count" => Unit::Count,
            _ => return None,
        })
    }

    /// Unitless values combine with anything; otherwise units must agree.
    pub fn compatible(self, other: Unit) -> bool {
        self == other || self == Unit::None || other == Unit::None
    }
}
