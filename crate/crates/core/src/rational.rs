//! Exact rational arithmetic for participation ratios, p-values and
//! significance thresholds.

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Non-negative exact fraction. Participation ratios, participation indices,
/// Monte Carlo p-values and Bonferroni thresholds all live here so that
/// comparisons such as `p <= alpha / n` are never subject to rounding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<u64>);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("number `{0}` has too many digits")]
    Overflow(String),
}

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    /// Panics if `den == 0`.
    pub fn new(num: u64, den: u64) -> Self {
        Rational(Ratio::new(num, den))
    }

    pub fn from_integer(n: u64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }

    /// `self / n`, used for Bonferroni thresholds. Panics if `n == 0`.
    pub fn div_int(self, n: u64) -> Self {
        Rational(self.0 / Ratio::from_integer(n))
    }

    pub fn mul_int(self, n: u64) -> Self {
        Rational(self.0 * Ratio::from_integer(n))
    }

    pub fn ceil(self) -> u64 {
        self.0.ceil().to_integer()
    }

    /// Parses `"0.05"`, `"1/20"` or `"3"` exactly.
    pub fn parse_exact(s: &str) -> Result<Self, ParseRationalError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        if let Some((n, d)) = s.split_once('/') {
            let num: u64 = n
                .trim()
                .parse()
                .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
            let den: u64 = d
                .trim()
                .parse()
                .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
            if den == 0 {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            return Ok(Rational::new(num, den));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let all_digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty())
            || !all_digits(int_part)
            || !all_digits(frac_part)
        {
            return Err(ParseRationalError::Invalid(s.to_string()));
        }
        if frac_part.len() > 18 {
            return Err(ParseRationalError::Overflow(s.to_string()));
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int_val: u64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| ParseRationalError::Overflow(s.to_string()))?
        };
        let frac_val: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part
                .parse()
                .map_err(|_| ParseRationalError::Overflow(s.to_string()))?
        };
        let num = int_val
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(|| ParseRationalError::Overflow(s.to_string()))?;
        Ok(Rational::new(num, den))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::ZERO
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rational::parse_exact(s)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Rational::parse_exact(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(Rational::parse_exact("0.05").unwrap(), Rational::new(1, 20));
        assert_eq!(Rational::parse_exact("1/60").unwrap(), Rational::new(1, 60));
        assert_eq!(
            Rational::parse_exact("3").unwrap(),
            Rational::from_integer(3)
        );
        assert_eq!(Rational::parse_exact(".5").unwrap(), Rational::new(1, 2));
        assert!(Rational::parse_exact("abc").is_err());
        assert!(Rational::parse_exact("1/0").is_err());
        assert!(Rational::parse_exact("-0.1").is_err());
        assert!(Rational::parse_exact(".").is_err());
    }

    #[test]
    fn bonferroni_division_is_exact() {
        let alpha = Rational::new(1, 20);
        assert_eq!(alpha.div_int(3), Rational::new(1, 60));
        assert_eq!(alpha.div_int(4), Rational::new(1, 80));
        assert!(Rational::new(5, 100) <= alpha);
        assert!(Rational::new(6, 100) > alpha);
    }

    #[test]
    fn serde_round_trip_as_string() {
        let r = Rational::new(9, 17);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "\"9/17\"");
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
