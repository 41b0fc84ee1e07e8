//! Exact decimal values used for every symbol identity in the crate.
//!
//! Spec points, grid steps and input values are carried as [`Dec`], a
//! normalized wrapper over [`rust_decimal::Decimal`]. Two values compare equal
//! iff they denote the same rational number, so `18.25` and `18.250` are the
//! same symbol. Binary floating point only appears when dynamics are
//! evaluated.

use std::fmt;
use std::str::FromStr;

use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
use rust_decimal::Decimal;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecError {
    #[error("invalid decimal literal `{0}`")]
    Parse(String),
    #[error("decimal overflow in {0}")]
    Overflow(&'static str),
    #[error("value {0} is not representable as an exact decimal")]
    NotRepresentable(f64),
}

/// Exact decimal number in canonical (normalized) form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Dec(Decimal);

impl Dec {
    pub const ZERO: Dec = Dec(Decimal::ZERO);
    pub const ONE: Dec = Dec(Decimal::ONE);

    pub fn new(mantissa: i64, scale: u32) -> Dec {
        Dec(Decimal::new(mantissa, scale).normalize())
    }

    pub fn from_int(v: i64) -> Dec {
        Dec(Decimal::from(v))
    }

    pub fn from_decimal(d: Decimal) -> Dec {
        Dec(d.normalize())
    }

    pub fn as_decimal(&self) -> Decimal {
        self.0
    }

    /// Shortest decimal that round-trips to `v`.
    pub fn from_f64_shortest(v: f64) -> Result<Dec, DecError> {
        if !v.is_finite() {
            return Err(DecError::NotRepresentable(v));
        }
        let text = format!("{v}");
        Decimal::from_str(&text)
            .or_else(|_| Decimal::from_scientific(&format!("{v:e}")))
            .map(Dec::from_decimal)
            .map_err(|_| DecError::NotRepresentable(v))
    }

    pub fn to_f64(&self) -> f64 {
        // Decimal -> f64 goes through the string form to get the nearest double.
        let s = self.0.to_string();
        s.parse::<f64>().unwrap_or_else(|_| self.0.to_f64().unwrap_or(f64::NAN))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_sign_positive_nonzero(&self) -> bool {
        self.0 > Decimal::ZERO
    }

    pub fn abs(&self) -> Dec {
        Dec(self.0.abs())
    }

    pub fn checked_add(&self, o: Dec) -> Result<Dec, DecError> {
        self.0.checked_add(o.0).map(Dec::from_decimal).ok_or(DecError::Overflow("add"))
    }

    pub fn checked_sub(&self, o: Dec) -> Result<Dec, DecError> {
        self.0.checked_sub(o.0).map(Dec::from_decimal).ok_or(DecError::Overflow("sub"))
    }

    pub fn checked_mul(&self, o: Dec) -> Result<Dec, DecError> {
        self.0.checked_mul(o.0).map(Dec::from_decimal).ok_or(DecError::Overflow("mul"))
    }

    pub fn mul_int(&self, k: i64) -> Result<Dec, DecError> {
        self.checked_mul(Dec::from_int(k))
    }

    /// Mantissas of `self` and `other` rescaled to their common scale.
    fn aligned(&self, other: &Dec) -> (i128, i128) {
        let scale = self.0.scale().max(other.0.scale());
        let lift = |d: &Decimal| -> i128 {
            let m = d.mantissa();
            m * 10i128.pow(scale - d.scale())
        };
        (lift(&self.0), lift(&other.0))
    }

    /// `floor(self / step + 1/2)`, computed exactly. `step` must be positive.
    pub fn nearest_multiple_index(&self, step: Dec) -> i64 {
        assert!(step.is_sign_positive_nonzero(), "grid step must be positive");
        let (z, h) = self.aligned(&step);
        (2 * z + h).div_euclid(2 * h) as i64
    }

    /// True iff `self` is an integer multiple of `step`.
    pub fn is_multiple_of(&self, step: Dec) -> bool {
        if step.is_zero() {
            return self.is_zero();
        }
        let (z, h) = self.aligned(&step);
        z.rem_euclid(h.abs()) == 0
    }

    /// Exact quotient when `self` is an integer multiple of `step`.
    pub fn exact_ratio(&self, step: Dec) -> Option<i64> {
        if step.is_zero() || !self.is_multiple_of(step) {
            return None;
        }
        let (z, h) = self.aligned(&step);
        i64::try_from(z / h).ok()
    }

    /// Largest value of the form k·10^e (k in {1, 2, 2.5, 5}) not above `bound`.
    pub fn nice_at_most(bound: f64) -> Option<Dec> {
        nice_decimals_descending(bound).next()
    }
}

/// Values k·10^e with k in {5, 2.5, 2, 1}, in decreasing order, starting with
/// the largest one `<= bound` (with a relative slack of 1e-12 so exact
/// boundaries survive binary rounding of `bound`).
pub fn nice_decimals_descending(bound: f64) -> impl Iterator<Item = Dec> {
    let limit = bound * (1.0 + 1e-12);
    let top = if bound > 0.0 { bound.log10().floor() as i32 + 1 } else { -30 };
    (-24..=top.min(24))
        .rev()
        .flat_map(|e| {
            [(5i64, 0u32), (25, 1), (2, 0), (1, 0)].into_iter().map(move |(k, extra)| {
                if e >= 0 {
                    Dec::from_decimal(
                        Decimal::new(k, extra) * Decimal::from_i128(10i128.pow(e as u32)).unwrap(),
                    )
                } else {
                    Dec::new(k, extra + (-e) as u32)
                }
            })
        })
        .filter(move |d| bound > 0.0 && d.to_f64() <= limit)
}

impl fmt::Display for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Dec {
    type Err = DecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Decimal::from_str_exact(t)
            .or_else(|_| Decimal::from_scientific(t))
            .map(Dec::from_decimal)
            .map_err(|_| DecError::Parse(s.to_string()))
    }
}

impl std::ops::Neg for Dec {
    type Output = Dec;
    fn neg(self) -> Dec {
        Dec::from_decimal(-self.0)
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct DecVisitor;
        impl Visitor<'_> for DecVisitor {
            type Value = Dec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string or number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
                Ok(Dec::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
                i64::try_from(v).map(Dec::from_int).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dec, E> {
                Dec::from_f64_shortest(v).map_err(E::custom)
            }
        }
        d.deserialize_any(DecVisitor)
    }
}

/// Parses a list of decimal literals.
pub fn decs(items: &[&str]) -> Result<Vec<Dec>, DecError> {
    items.iter().map(|s| s.parse()).collect()
}

pub fn to_f64_vec(v: &[Dec]) -> Vec<f64> {
    v.iter().map(Dec::to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dec {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_equality() {
        assert_eq!(d("18.250"), d("18.25"));
        assert_eq!(d("1e1"), d("10"));
        assert_eq!(d("18.25").to_string(), "18.25");
    }

    #[test]
    fn nearest_multiple_exact() {
        assert_eq!(d("18").nearest_multiple_index(d("0.0225")), 800);
        assert_eq!(d("19").nearest_multiple_index(d("0.0225")), 844);
        assert_eq!(d("0.5").nearest_multiple_index(d("1")), 1);
        assert_eq!(d("-0.5").nearest_multiple_index(d("1")), 0);
        assert_eq!(d("-1.5").nearest_multiple_index(d("1")), -1);
    }

    #[test]
    fn divisibility() {
        assert!(!d("18.25").is_multiple_of(d("0.0225")));
        assert!(d("18.25").is_multiple_of(d("0.025")));
        assert!(d("18.25").is_multiple_of(d("0.01")));
        assert_eq!(d("18").exact_ratio(d("0.0225")), Some(800));
    }

    #[test]
    fn nice_sequence() {
        let v: Vec<String> = nice_decimals_descending(0.0225).take(5).map(|x| x.to_string()).collect();
        assert_eq!(v, ["0.02", "0.01", "0.005", "0.0025", "0.002"]);
        assert_eq!(Dec::nice_at_most(0.0225f64).unwrap(), d("0.02"));
        assert_eq!(Dec::nice_at_most(0.025).unwrap(), d("0.025"));
        assert_eq!(Dec::nice_at_most(30.0).unwrap(), d("25"));
    }

    #[test]
    fn shortest_from_f64() {
        assert_eq!(Dec::from_f64_shortest(0.1 + 0.2).unwrap().to_string(), "0.30000000000000004");
        assert_eq!(Dec::from_f64_shortest(0.5).unwrap(), d("0.5"));
        assert_eq!(d("18.99").to_f64(), 18.99);
    }
}
