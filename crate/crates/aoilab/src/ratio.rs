//! Exact rational arithmetic for all time and size quantities.
//!
//! Every number in the system is a `Ratio`: an arbitrary-precision
//! fraction in canonical reduced form with a positive denominator.
//! There is no floating point anywhere on the simulation path, so
//! equalities like `r_i == g_j + s_j` are decidable and regression
//! values are bit-exact.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational number (arbitrary precision, canonical reduced form).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RatioParseError {
    #[error("empty number")]
    Empty,
    #[error("invalid number {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

impl Ratio {
    pub fn new(numerator: impl Into<BigInt>, denominator: impl Into<BigInt>) -> Self {
        let d: BigInt = denominator.into();
        assert!(!d.is_zero(), "zero denominator");
        Ratio(BigRational::new(numerator.into(), d))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Ratio(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Ratio(BigRational::zero())
    }

    pub fn one() -> Self {
        Ratio(BigRational::one())
    }

    /// Dyadic rational k / 2^bits.
    pub fn dyadic(k: u64, bits: u32) -> Self {
        Ratio(BigRational::new(
            BigInt::from(k),
            BigInt::from(1u8) << bits as usize,
        ))
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Ratio(self.0.abs())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Closest f64, for human-facing output only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering truncated to `digits` significant digits.
    ///
    /// Exact terminating expansions are printed in full when shorter.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let a = self.0.abs();
        let (mut int_part, mut rem) = (a.numer() / a.denom(), a.numer() % a.denom());
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&int_part.to_string());
        if rem.is_zero() {
            return out;
        }
        let mut sig = if int_part.is_zero() {
            0
        } else {
            int_part.to_string().len()
        };
        let mut frac = String::new();
        let ten = BigInt::from(10u8);
        while !rem.is_zero() && sig < digits && frac.len() < digits + 40 {
            rem *= &ten;
            int_part = &rem / a.denom();
            rem = &rem % a.denom();
            let d = int_part.to_u8().unwrap();
            frac.push((b'0' + d) as char);
            if sig > 0 || d != 0 {
                sig += 1;
            }
        }
        out.push('.');
        out.push_str(&frac);
        if !rem.is_zero() {
            out.push('…');
        }
        out
    }
}

impl fmt::Display for Ratio {
    /// Canonical form: `p` for integers, `p/q` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Ratio {
    type Err = RatioParseError;

    /// Accepts integers (`3`, `-7`), fractions (`29/20`) and decimal
    /// strings (`1.45`), all parsed exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(RatioParseError::Empty);
        }
        if let Some((num, den)) = s.split_once('/') {
            let n = BigInt::from_str(num.trim())
                .map_err(|_| RatioParseError::Invalid(s.to_string()))?;
            let d = BigInt::from_str(den.trim())
                .map_err(|_| RatioParseError::Invalid(s.to_string()))?;
            if d.is_zero() {
                return Err(RatioParseError::ZeroDenominator(s.to_string()));
            }
            return Ok(Ratio(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let (sign, int_digits) = match int.strip_prefix('-') {
                Some(rest) => (Sign::Minus, rest),
                None => (Sign::Plus, int.strip_prefix('+').unwrap_or(int)),
            };
            let joined = format!(
                "{}{}",
                if int_digits.is_empty() { "0" } else { int_digits },
                frac
            );
            if frac.is_empty() || !joined.bytes().all(|b| b.is_ascii_digit()) {
                return Err(RatioParseError::Invalid(s.to_string()));
            }
            let mut n = BigInt::from_str(&joined)
                .map_err(|_| RatioParseError::Invalid(s.to_string()))?;
            if sign == Sign::Minus {
                n = -n;
            }
            let d = BigInt::from(10u8).pow(frac.len() as u32);
            return Ok(Ratio(BigRational::new(n, d)));
        }
        BigInt::from_str(s)
            .map(|n| Ratio(BigRational::from_integer(n)))
            .map_err(|_| RatioParseError::Invalid(s.to_string()))
    }
}

impl From<i64> for Ratio {
    fn from(n: i64) -> Self {
        Ratio::from_int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Ratio {
            type Output = Ratio;
            fn $method(self, rhs: Ratio) -> Ratio {
                Ratio((self.0).$method(rhs.0))
            }
        }
        impl $trait<&Ratio> for &Ratio {
            type Output = Ratio;
            fn $method(self, rhs: &Ratio) -> Ratio {
                Ratio((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<&Ratio> for Ratio {
            type Output = Ratio;
            fn $method(self, rhs: &Ratio) -> Ratio {
                Ratio((self.0).$method(&rhs.0))
            }
        }
        impl $trait<Ratio> for &Ratio {
            type Output = Ratio;
            fn $method(self, rhs: Ratio) -> Ratio {
                Ratio((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Div for Ratio {
    type Output = Ratio;
    fn div(self, rhs: Ratio) -> Ratio {
        assert!(!rhs.is_zero(), "division by zero");
        Ratio(self.0 / rhs.0)
    }
}

impl Div<&Ratio> for &Ratio {
    type Output = Ratio;
    fn div(self, rhs: &Ratio) -> Ratio {
        assert!(!rhs.is_zero(), "division by zero");
        Ratio(&self.0 / &rhs.0)
    }
}

impl Neg for Ratio {
    type Output = Ratio;
    fn neg(self) -> Ratio {
        Ratio(-self.0)
    }
}

impl AddAssign<&Ratio> for Ratio {
    fn add_assign(&mut self, rhs: &Ratio) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Ratio> for Ratio {
    fn sub_assign(&mut self, rhs: &Ratio) {
        self.0 -= &rhs.0;
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixtures: parses `"p/q"`, decimals, integers.
pub fn rat(s: &str) -> Ratio {
    s.parse().expect("rat literal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_forms() {
        assert_eq!(rat("29/20"), rat("1.45"));
        assert_eq!(rat("-3/4"), rat("-0.75"));
        assert_eq!(rat("5"), Ratio::from_int(5));
        assert_eq!(rat("2/4"), rat("1/2"));
        assert!("".parse::<Ratio>().is_err());
        assert!("1/0".parse::<Ratio>().is_err());
        assert!("1.2.3".parse::<Ratio>().is_err());
    }

    #[test]
    fn canonical_display_round_trips() {
        for s in ["0", "1", "-7", "29/20", "-3/4", "558/553"] {
            let r = rat(s);
            assert_eq!(r.to_string(), s);
            assert_eq!(rat(&r.to_string()), r);
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rat("279/200").to_decimal_string(30), "1.395");
        assert_eq!(rat("553/400").to_decimal_string(30), "1.3825");
        assert_eq!(rat("1/3").to_decimal_string(5), "0.33333…");
        assert_eq!(rat("-1/2").to_decimal_string(5), "-0.5");
        assert_eq!(rat("0").to_decimal_string(5), "0");
    }

    #[test]
    fn dyadic_values() {
        assert_eq!(Ratio::dyadic(3, 2), rat("3/4"));
        assert_eq!(Ratio::dyadic(0, 32), Ratio::zero());
    }

    fn arb_ratio() -> impl Strategy<Value = Ratio> {
        (-1000i64..1000, 1i64..1000).prop_map(|(n, d)| Ratio::new(n, d))
    }

    proptest! {
        #[test]
        fn field_laws(a in arb_ratio(), b in arb_ratio(), c in arb_ratio()) {
            prop_assert_eq!((a.clone() + b.clone()) + c.clone(),
                            a.clone() + (b.clone() + c.clone()));
            prop_assert_eq!(a.clone() * (b.clone() + c.clone()),
                            a.clone() * b.clone() + a.clone() * c.clone());
            prop_assert_eq!(a.clone() - a.clone(), Ratio::zero());
        }

        #[test]
        fn display_parse_round_trip(a in arb_ratio()) {
            prop_assert_eq!(rat(&a.to_string()), a);
        }
    }
}
