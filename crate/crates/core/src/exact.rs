//! Exact dyadic rationals.
//!
//! Every value that appears in the simulator (operands, residuals, partial
//! products, error bounds) is a dyadic rational `numerator / 2^scale`, so this
//! type is closed under the operations the oracle needs and never rounds.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// `numerator / 2^scale`, kept in lowest terms (odd numerator whenever
/// `scale > 0`, and `scale == 0` for zero).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactFraction {
    numerator: BigInt,
    scale: u32,
}

impl ExactFraction {
    pub fn new(numerator: impl Into<BigInt>, scale: u32) -> Self {
        let mut f = ExactFraction {
            numerator: numerator.into(),
            scale,
        };
        f.normalize();
        f
    }

    pub fn zero() -> Self {
        ExactFraction {
            numerator: BigInt::zero(),
            scale: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(v, 0)
    }

    /// `2^exp` for any integer exponent.
    pub fn pow2(exp: i64) -> Self {
        if exp >= 0 {
            ExactFraction::new(BigInt::one() << (exp as usize), 0)
        } else {
            ExactFraction::new(1, (-exp) as u32)
        }
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.scale = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(self.scale as u64) as u32;
        if shift > 0 {
            self.numerator >>= shift as usize;
            self.scale -= shift;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn abs(&self) -> Self {
        ExactFraction {
            numerator: self.numerator.abs(),
            scale: self.scale,
        }
    }

    pub fn signum(&self) -> i32 {
        match self.numerator.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Numerator when the value is expressed over `2^scale`.
    ///
    /// Returns `None` if the value needs more than `scale` fractional bits.
    pub fn scaled_numerator(&self, scale: u32) -> Option<BigInt> {
        if self.scale > scale {
            None
        } else {
            Some(&self.numerator << ((scale - self.scale) as usize))
        }
    }

    /// Multiply by `2^exp`.
    pub fn shl(&self, exp: i64) -> Self {
        if exp >= 0 {
            let e = exp as u32;
            if e <= self.scale {
                ExactFraction {
                    numerator: self.numerator.clone(),
                    scale: self.scale - e,
                }
            } else {
                ExactFraction::new(&self.numerator << ((e - self.scale) as usize), 0)
            }
        } else {
            ExactFraction::new(self.numerator.clone(), self.scale + (-exp) as u32)
        }
    }

    /// Largest multiple of `2^-t` not above `self`.
    pub fn floor_to(&self, t: u32) -> Self {
        if self.scale <= t {
            return self.clone();
        }
        let shift = (self.scale - t) as usize;
        let q = self.numerator.div_floor(&(BigInt::one() << shift));
        ExactFraction::new(q, t)
    }

    /// Smallest multiple of `2^-t` not below `self`.
    pub fn ceil_to(&self, t: u32) -> Self {
        -(-self).floor_to(t)
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::NAN);
        n * 2f64.powi(-(self.scale as i32))
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
}

impl Default for ExactFraction {
    fn default() -> Self {
        Self::zero()
    }
}

impl Ord for ExactFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.scale.max(other.scale);
        let a = &self.numerator << ((s - self.scale) as usize);
        let b = &other.numerator << ((s - other.scale) as usize);
        a.cmp(&b)
    }
}

impl PartialOrd for ExactFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a ExactFraction> for &'a ExactFraction {
    type Output = ExactFraction;
    fn add(self, rhs: &'a ExactFraction) -> ExactFraction {
        let s = self.scale.max(rhs.scale);
        let a = &self.numerator << ((s - self.scale) as usize);
        let b = &rhs.numerator << ((s - rhs.scale) as usize);
        ExactFraction::new(a + b, s)
    }
}

impl<'a> Sub<&'a ExactFraction> for &'a ExactFraction {
    type Output = ExactFraction;
    fn sub(self, rhs: &'a ExactFraction) -> ExactFraction {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a ExactFraction> for &'a ExactFraction {
    type Output = ExactFraction;
    fn mul(self, rhs: &'a ExactFraction) -> ExactFraction {
        ExactFraction::new(&self.numerator * &rhs.numerator, self.scale + rhs.scale)
    }
}

impl Neg for &ExactFraction {
    type Output = ExactFraction;
    fn neg(self) -> ExactFraction {
        ExactFraction {
            numerator: -&self.numerator,
            scale: self.scale,
        }
    }
}

impl Neg for ExactFraction {
    type Output = ExactFraction;
    fn neg(self) -> ExactFraction {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<ExactFraction> for ExactFraction {
            type Output = ExactFraction;
            fn $m(self, rhs: ExactFraction) -> ExactFraction {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a ExactFraction> for ExactFraction {
            type Output = ExactFraction;
            fn $m(self, rhs: &'a ExactFraction) -> ExactFraction {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<ExactFraction> for &'a ExactFraction {
            type Output = ExactFraction;
            fn $m(self, rhs: ExactFraction) -> ExactFraction {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for ExactFraction {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ExactFraction::zero(), |acc, x| acc + x)
    }
}

/// Exact decimal expansion; every dyadic rational has a finite one.
impl fmt::Display for ExactFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.numerator.is_negative();
        let mag = self.numerator.abs();
        let k = self.scale as usize;
        let int_part = &mag >> k;
        let frac_bits = &mag - (&int_part << k);
        if neg {
            write!(f, "-")?;
        }
        write!(f, "{int_part}")?;
        if k > 0 {
            // frac / 2^k == frac * 5^k / 10^k
            let digits = (frac_bits * num_traits::pow(BigInt::from(5), k)).to_string();
            write!(f, ".{}{}", "0".repeat(k - digits.len()), digits)?;
        }
        Ok(())
    }
}

impl fmt::Debug for ExactFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses a decimal literal whose value is a dyadic rational, e.g. `-0.3125`.
impl FromStr for ExactFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadNumber(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (ip, fp) = match body.split_once('.') {
            Some((a, b)) => (a, b),
            None => (body, ""),
        };
        if (ip.is_empty() && fp.is_empty())
            || !ip.bytes().all(|c| c.is_ascii_digit())
            || !fp.bytes().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits = format!("{ip}{fp}");
        let mut num: BigInt = digits.parse().map_err(|_| bad())?;
        let m = fp.len();
        // num / 10^m = num / 5^m / 2^m; dyadic iff 5^m divides num.
        let five_m = num_traits::pow(BigInt::from(5), m);
        let (q, r) = num.div_rem(&five_m);
        if !r.is_zero() {
            return Err(bad());
        }
        num = q;
        if neg {
            num = -num;
        }
        Ok(ExactFraction::new(num, m as u32))
    }
}

impl Serialize for ExactFraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactFraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ef(s: &str) -> ExactFraction {
        s.parse().unwrap()
    }

    #[test]
    fn normalizes() {
        let a = ExactFraction::new(4, 3);
        assert_eq!(a.scale(), 1);
        assert_eq!(a, ExactFraction::new(1, 1));
        assert_eq!(ExactFraction::new(0, 9).scale(), 0);
    }

    #[test]
    fn decimal_round_trip() {
        for s in ["0", "0.5", "-0.25", "0.66644287109375", "-0.2103424072265625", "3"] {
            assert_eq!(ef(s).to_string(), s);
        }
        assert!("0.1".parse::<ExactFraction>().is_err());
        assert!("abc".parse::<ExactFraction>().is_err());
        assert!(".".parse::<ExactFraction>().is_err());
    }

    #[test]
    fn quantization() {
        let x = ef("-2.1875");
        assert_eq!(x.floor_to(2), ef("-2.25"));
        assert_eq!(x.ceil_to(2), ef("-2"));
        assert_eq!(ef("0.5").floor_to(1), ef("0.5"));
    }

    #[test]
    fn pow2_and_shift() {
        assert_eq!(ExactFraction::pow2(-3), ef("0.125"));
        assert_eq!(ExactFraction::pow2(2), ef("4"));
        assert_eq!(ef("0.375").shl(3), ef("3"));
        assert_eq!(ef("3").shl(-2), ef("0.75"));
    }

    fn arb() -> impl Strategy<Value = ExactFraction> {
        (any::<i64>(), 0u32..80).prop_map(|(n, k)| ExactFraction::new(n, k))
    }

    proptest! {
        #[test]
        fn field_identities(a in arb(), b in arb(), c in arb()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
        }

        #[test]
        fn display_parses_back(a in arb()) {
            prop_assert_eq!(a.to_string().parse::<ExactFraction>().unwrap(), a);
        }

        #[test]
        fn ordering_matches_difference(a in arb(), b in arb()) {
            prop_assert_eq!(a.cmp(&b), (&a - &b).signum().cmp(&0));
        }
    }
}
