//! Exact decimal-friendly rational numbers.
//!
//! Every quantity in the network state (capacities, latencies, bandwidth) is
//! held as an exact rational so that SQL predicates and aggregates never see
//! floating-point rounding.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Digits kept when rendering a rational whose decimal expansion does not terminate.
const MAX_FRACTION_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, thiserror::Error)]
#[error("invalid number literal")]
pub struct ParseNumError;

/// An exact rational number.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Num(Ratio<i128>);

impl Num {
    pub const ZERO: Num = Num(Ratio::new_raw(0, 1));

    pub fn from_int(v: i64) -> Self {
        Num(Ratio::from_integer(v as i128))
    }

    pub fn new(numer: i64, denom: i64) -> Self {
        Num(Ratio::new(numer as i128, denom as i128))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// The integer value, when the number is integral and fits an `i64`.
    pub fn to_i64(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts through the shortest decimal representation of `v`, so `0.064_f64`
    /// becomes exactly 64/1000.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        format!("{v}").parse().ok()
    }

    /// True when the decimal expansion terminates (denominator has only factors 2 and 5).
    pub fn is_terminating(&self) -> bool {
        let mut d = *self.0.denom();
        while d % 2 == 0 {
            d /= 2;
        }
        while d % 5 == 0 {
            d /= 5;
        }
        d == 1
    }

    pub fn checked_add(self, rhs: Num) -> Option<Num> {
        let (a, b) = (self.0, rhs.0);
        let l = a.denom().lcm(b.denom());
        let x = a.numer().checked_mul(l / a.denom())?;
        let y = b.numer().checked_mul(l / b.denom())?;
        Some(Num(Ratio::new(x.checked_add(y)?, l)))
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Self {
        Num::from_int(v)
    }
}

impl From<u32> for Num {
    fn from(v: u32) -> Self {
        Num::from_int(v as i64)
    }
}

impl Add for Num {
    type Output = Num;
    fn add(self, rhs: Num) -> Num {
        Num(self.0 + rhs.0)
    }
}

impl Sub for Num {
    type Output = Num;
    fn sub(self, rhs: Num) -> Num {
        Num(self.0 - rhs.0)
    }
}

impl Mul for Num {
    type Output = Num;
    fn mul(self, rhs: Num) -> Num {
        Num(self.0 * rhs.0)
    }
}

impl Div for Num {
    type Output = Num;
    fn div(self, rhs: Num) -> Num {
        Num(self.0 / rhs.0)
    }
}

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        Num(-self.0)
    }
}

impl Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Num {
        iter.fold(Num::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl FromStr for Num {
    type Err = ParseNumError;

    /// Accepts plain decimals: optional sign, digits, optional fraction.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseNumError);
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > 18
        {
            return Err(ParseNumError);
        }
        let mut numer: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            numer = numer
                .checked_mul(10)
                .and_then(|n| n.checked_add((b - b'0') as i128))
                .ok_or(ParseNumError)?;
        }
        let denom = 10i128.pow(frac_part.len() as u32);
        let r = Ratio::new(numer, denom);
        Ok(Num(if neg { -r } else { r }))
    }
}

impl fmt::Display for Num {
    /// Decimal rendering: integers without a point, terminating fractions exactly,
    /// other fractions rounded half-away-from-zero to twelve digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        if r.is_integer() {
            return write!(f, "{}", r.to_integer());
        }
        let neg = r.is_negative();
        let abs = r.abs();
        let denom = *abs.denom();
        let mut int = abs.numer() / denom;
        let mut rem = abs.numer() % denom;
        let mut digits = Vec::new();
        while !rem.is_zero() && digits.len() < MAX_FRACTION_DIGITS {
            rem *= 10;
            digits.push((rem / denom) as u8);
            rem %= denom;
        }
        if !rem.is_zero() && rem * 2 >= denom {
            // carry the rounding up through the digits
            let mut i = digits.len();
            loop {
                if i == 0 {
                    int += 1;
                    break;
                }
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
        while digits.last() == Some(&0) {
            digits.pop();
        }
        if neg {
            f.write_str("-")?;
        }
        write!(f, "{int}")?;
        if !digits.is_empty() {
            f.write_str(".")?;
            for d in digits {
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Num {
    /// Accepts decimal strings as well as plain numbers (TOML/JSON scenario files).
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or decimal string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                i64::try_from(v)
                    .map(Num::from_int)
                    .map_err(|_| E::custom("integer out of range"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Num::from_f64(v).ok_or_else(|| E::custom("non-finite number"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                v.parse().map_err(|_| E::custom(format!("invalid decimal {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_renders_decimals() {
        let n: Num = "0.064".parse().unwrap();
        assert_eq!(n, Num::new(64, 1000));
        assert_eq!(n.to_string(), "0.064");
        assert_eq!("79.20".parse::<Num>().unwrap().to_string(), "79.2");
        assert_eq!("-3".parse::<Num>().unwrap().to_string(), "-3");
        assert_eq!(".5".parse::<Num>().unwrap().to_string(), "0.5");
        assert!("1e3".parse::<Num>().is_err());
        assert!("".parse::<Num>().is_err());
        assert!("-".parse::<Num>().is_err());
    }

    #[test]
    fn non_terminating_fraction_is_rounded() {
        assert_eq!(Num::new(1, 3).to_string(), "0.333333333333");
        assert_eq!(Num::new(2, 3).to_string(), "0.666666666667");
        assert_eq!(Num::new(-2, 3).to_string(), "-0.666666666667");
        assert!(!Num::new(1, 3).is_terminating());
        assert!(Num::new(1, 40).is_terminating());
    }

    #[test]
    fn from_f64_is_exact_for_short_decimals() {
        assert_eq!(Num::from_f64(0.064).unwrap(), Num::new(64, 1000));
        assert_eq!(Num::from_f64(100.0).unwrap(), Num::from_int(100));
        assert!(Num::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn serde_accepts_strings_and_numbers() {
        let v: Vec<Num> = serde_json::from_str(r#"["1.5", 2, 0.25]"#).unwrap();
        assert_eq!(v, vec![Num::new(3, 2), Num::from_int(2), Num::new(1, 4)]);
        assert_eq!(serde_json::to_string(&Num::new(3, 2)).unwrap(), r#""1.5""#);
    }

    proptest! {
        #[test]
        fn terminating_render_roundtrips(numer in -1_000_000i64..1_000_000, exp in 0u32..6) {
            let n = Num::new(numer, 10i64.pow(exp));
            prop_assert_eq!(n.to_string().parse::<Num>().unwrap(), n);
        }
    }
}
