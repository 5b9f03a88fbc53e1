//! Radix-2 signed-digit numbers and the conventional two's-complement words
//! the multipliers convert them into.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::ExactFraction;

/// One radix-2 digit in {-1, 0, 1}, carried as a (plus, minus) bit pair whose
/// difference is the digit value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SignedDigit {
    plus: bool,
    minus: bool,
}

impl SignedDigit {
    pub const ZERO: SignedDigit = SignedDigit {
        plus: false,
        minus: false,
    };
    pub const ONE: SignedDigit = SignedDigit {
        plus: true,
        minus: false,
    };
    pub const NEG_ONE: SignedDigit = SignedDigit {
        plus: false,
        minus: true,
    };

    /// All three digits, in ascending value order.
    pub const ALL: [SignedDigit; 3] = [Self::NEG_ONE, Self::ZERO, Self::ONE];

    pub fn from_bits(plus: bool, minus: bool) -> Result<Self> {
        if plus && minus {
            return Err(Error::NonCanonicalDigit);
        }
        Ok(SignedDigit { plus, minus })
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Self::ONE),
            0 => Ok(Self::ZERO),
            -1 => Ok(Self::NEG_ONE),
            _ => Err(Error::DigitOutOfRange(v)),
        }
    }

    pub fn plus(self) -> bool {
        self.plus
    }

    pub fn minus(self) -> bool {
        self.minus
    }

    /// `plus - minus`.
    pub fn value(self) -> i8 {
        self.plus as i8 - self.minus as i8
    }

    /// `|d|`, the bit the M block XORs into v_0.
    pub fn magnitude(self) -> bool {
        self.plus | self.minus
    }

    pub fn negate(self) -> Self {
        SignedDigit {
            plus: self.minus,
            minus: self.plus,
        }
    }

    pub fn to_char(self) -> char {
        match self.value() {
            1 => '1',
            -1 => 'T',
            _ => '0',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            '1' => Ok(Self::ONE),
            '0' => Ok(Self::ZERO),
            'T' => Ok(Self::NEG_ONE),
            other => Err(Error::BadDigitChar(other)),
        }
    }
}

impl fmt::Debug for SignedDigit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl fmt::Display for SignedDigit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl Serialize for SignedDigit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for SignedDigit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        SignedDigit::from_value(v).map_err(serde::de::Error::custom)
    }
}

/// An MSDF digit sequence d_1 ... d_n with value sum(d_i 2^-i).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct SdWord {
    digits: Vec<SignedDigit>,
}

impl SdWord {
    pub fn new(digits: Vec<SignedDigit>) -> Self {
        SdWord { digits }
    }

    pub fn zero(n: usize) -> Self {
        SdWord {
            digits: vec![SignedDigit::ZERO; n],
        }
    }

    pub fn from_values(values: &[i64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| SignedDigit::from_value(v))
            .collect::<Result<Vec<_>>>()
            .map(SdWord::new)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[SignedDigit] {
        &self.digits
    }

    /// Digit `d_i` with 1-based index; zero beyond the end.
    pub fn digit(&self, i: usize) -> SignedDigit {
        if i == 0 {
            return SignedDigit::ZERO;
        }
        self.digits.get(i - 1).copied().unwrap_or(SignedDigit::ZERO)
    }

    pub fn values(&self) -> Vec<i8> {
        self.digits.iter().map(|d| d.value()).collect()
    }

    /// Exact value of the word.
    pub fn value(&self) -> ExactFraction {
        self.prefix_value(self.digits.len())
    }

    /// Value of the first `k` digits (the online form x[j] with k = j + delta).
    pub fn prefix_value(&self, k: usize) -> ExactFraction {
        let k = k.min(self.digits.len());
        let mut acc = BigInt::zero();
        for d in &self.digits[..k] {
            acc = (acc << 1usize) + BigInt::from(d.value());
        }
        ExactFraction::new(acc, k as u32)
    }

    /// Magnitude-sign recoding of a conventional value into `n` digits: the
    /// binary digits of |f|, all negated when f is negative.
    pub fn from_fixed(f: &ExactFraction, n: usize) -> Result<Self> {
        let scaled = f
            .scaled_numerator(n as u32)
            .ok_or_else(|| Error::NotRepresentable {
                value: f.to_string(),
                bits: n as u32,
            })?;
        let limit = (BigInt::one() << n) - 1;
        let mag = num_traits::Signed::abs(&scaled);
        if mag > limit {
            return Err(Error::OutOfRange {
                value: f.to_string(),
                what: "an n-digit signed-digit word",
            });
        }
        let neg = f.is_negative();
        let digits = (0..n)
            .map(|i| {
                let bit = ((&mag >> (n - 1 - i)) & BigInt::one()).to_u8() == Some(1);
                match (bit, neg) {
                    (false, _) => SignedDigit::ZERO,
                    (true, false) => SignedDigit::ONE,
                    (true, true) => SignedDigit::NEG_ONE,
                }
            })
            .collect();
        Ok(SdWord { digits })
    }
}

impl fmt::Display for SdWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{}", d.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for SdWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SdWord({self})")
    }
}

impl FromStr for SdWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::EmptyDigits);
        }
        s.chars()
            .map(SignedDigit::from_char)
            .collect::<Result<Vec<_>>>()
            .map(SdWord::new)
    }
}

impl Serialize for SdWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SdWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

const MAX_WIDTH: u32 = 120;

/// A two's-complement word with `ib` integer bits (including the sign) and
/// `fb` fractional bits.
///
/// Bit positions use the fractional numbering of the datapath: position `i`
/// has weight `2^-i`, so the integer bits of a 2-integer-bit word are at
/// positions -1 (the sign, weight -2) and 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    // value * 2^fb, sign-extended from bit ib+fb-1
    raw: i128,
    ib: u32,
    fb: u32,
}

impl FixedPoint {
    fn check_width(ib: u32, fb: u32) -> Result<()> {
        if ib == 0 || ib + fb > MAX_WIDTH {
            return Err(Error::TooWide(ib + fb));
        }
        Ok(())
    }

    fn wrap(raw: i128, width: u32) -> i128 {
        let sh = 128 - width;
        (raw << sh) >> sh
    }

    /// Builds a word from a raw bit pattern, wrapping modulo 2^(ib+fb).
    pub fn from_raw(raw: i128, ib: u32, fb: u32) -> Result<Self> {
        Self::check_width(ib, fb)?;
        Ok(FixedPoint {
            raw: Self::wrap(raw, ib + fb),
            ib,
            fb,
        })
    }

    pub(crate) fn from_raw_unchecked(raw: i128, ib: u32, fb: u32) -> Self {
        FixedPoint {
            raw: Self::wrap(raw, ib + fb),
            ib,
            fb,
        }
    }

    pub fn zero(ib: u32, fb: u32) -> Result<Self> {
        Self::from_raw(0, ib, fb)
    }

    /// Exact conversion; fails if the value needs more than `fb` fractional
    /// bits or does not fit in `ib` integer bits.
    pub fn from_exact(v: &ExactFraction, ib: u32, fb: u32) -> Result<Self> {
        Self::check_width(ib, fb)?;
        let scaled = v.scaled_numerator(fb).ok_or_else(|| Error::NotRepresentable {
            value: v.to_string(),
            bits: fb,
        })?;
        let raw = scaled.to_i128().ok_or(Error::OutOfRange {
            value: v.to_string(),
            what: "fixed-point word",
        })?;
        let half = 1i128 << (ib + fb - 1);
        if raw < -half || raw >= half {
            return Err(Error::OutOfRange {
                value: v.to_string(),
                what: "fixed-point word",
            });
        }
        Ok(FixedPoint { raw, ib, fb })
    }

    pub fn ib(&self) -> u32 {
        self.ib
    }

    pub fn fb(&self) -> u32 {
        self.fb
    }

    pub fn width(&self) -> u32 {
        self.ib + self.fb
    }

    /// Signed integer `value * 2^fb`.
    pub fn raw(&self) -> i128 {
        self.raw
    }

    /// Unsigned bit pattern of width `ib + fb`.
    pub fn bits(&self) -> u128 {
        (self.raw as u128) & (u128::MAX >> (128 - self.width()))
    }

    pub fn value(&self) -> ExactFraction {
        ExactFraction::new(self.raw, self.fb)
    }

    pub fn is_negative(&self) -> bool {
        self.raw < 0
    }

    /// Bit at datapath position `pos` (weight 2^-pos). Positions above the
    /// word read as the sign, positions below read as zero.
    pub fn bit(&self, pos: i32) -> bool {
        let idx = self.fb as i32 - pos;
        if idx < 0 {
            false
        } else if idx >= 127 {
            self.raw < 0
        } else {
            (self.raw >> idx) & 1 == 1
        }
    }

    /// Clears every bit below position `keep` (keeps `keep` fractional bits),
    /// i.e. truncation toward minus infinity without changing `fb`.
    pub fn truncate(&self, keep: u32) -> FixedPoint {
        if keep >= self.fb {
            return *self;
        }
        let drop = self.fb - keep;
        FixedPoint {
            raw: (self.raw >> drop) << drop,
            ..*self
        }
    }

    /// Re-expresses the word with `fb` fractional bits, appending zeros or
    /// dropping low bits.
    pub fn with_fb(&self, fb: u32) -> FixedPoint {
        if fb >= self.fb {
            FixedPoint::from_raw_unchecked(self.raw << (fb - self.fb), self.ib, fb)
        } else {
            FixedPoint::from_raw_unchecked(self.raw >> (self.fb - fb), self.ib, fb)
        }
    }

    /// Re-expresses the word with `ib` integer bits, sign-extending or
    /// dropping top bits (wrapping).
    pub fn with_ib(&self, ib: u32) -> FixedPoint {
        FixedPoint::from_raw_unchecked(self.raw, ib, self.fb)
    }

    /// Appends `bit` as a new least-significant fractional bit.
    pub fn append_bit(&self, bit: bool) -> FixedPoint {
        FixedPoint::from_raw_unchecked((self.raw << 1) | bit as i128, self.ib, self.fb + 1)
    }

    /// Bitwise complement over the word's own width.
    pub fn not(&self) -> FixedPoint {
        FixedPoint {
            raw: !self.raw,
            ..*self
        }
    }

    pub fn wrapping_add(&self, other: &FixedPoint) -> Result<FixedPoint> {
        self.same_shape(other)?;
        Ok(FixedPoint::from_raw_unchecked(
            self.raw.wrapping_add(other.raw),
            self.ib,
            self.fb,
        ))
    }

    pub fn same_shape(&self, other: &FixedPoint) -> Result<()> {
        if self.ib != other.ib || self.fb != other.fb {
            return Err(Error::WidthMismatch(
                format!("{}.{}", self.ib, self.fb),
                format!("{}.{}", other.ib, other.fb),
            ));
        }
        Ok(())
    }

    /// Binary rendering with `ib` integer digits, a point, and `fb` digits.
    pub fn to_bit_string(&self) -> String {
        let mut s = String::with_capacity(self.width() as usize + 1);
        for pos in (1 - self.ib as i32)..=self.fb as i32 {
            if pos == 1 {
                s.push('.');
            }
            s.push(if self.bit(pos) { '1' } else { '0' });
        }
        if self.fb == 0 {
            s.push('.');
        }
        s
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_bit_string())
    }
}

impl fmt::Debug for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedPoint({})", self.to_bit_string())
    }
}

/// Parses `"11.1001"`-style two's-complement strings.
impl FromStr for FixedPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (ip, fp) = s.split_once('.').ok_or_else(|| Error::BadNumber(s.into()))?;
        if ip.is_empty() || !s.chars().all(|c| c == '0' || c == '1' || c == '.') {
            return Err(Error::BadNumber(s.into()));
        }
        let ib = ip.len() as u32;
        let fb = fp.len() as u32;
        Self::check_width(ib, fb)?;
        let mut raw: i128 = 0;
        for c in ip.chars().chain(fp.chars()) {
            raw = (raw << 1) | (c == '1') as i128;
        }
        FixedPoint::from_raw(raw, ib, fb)
    }
}

impl Serialize for FixedPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for FixedPoint {
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
    fn digit_values() {
        assert_eq!(SignedDigit::from_bits(true, false).unwrap().value(), 1);
        assert_eq!(SignedDigit::from_bits(false, true).unwrap().value(), -1);
        assert_eq!(SignedDigit::from_bits(false, false).unwrap().value(), 0);
        assert_eq!(
            SignedDigit::from_bits(true, true),
            Err(Error::NonCanonicalDigit)
        );
        assert!(SignedDigit::from_value(2).is_err());
    }

    #[test]
    fn table_operand_values() {
        let x = SdWord::from_values(&[1, 1, 0, -1, 0, -1, -1, 0, 1, 1, -1, 0, -1, 1, 0, 0]).unwrap();
        assert_eq!(x.value(), ef("0.66644287109375"));
        assert_eq!(SdWord::zero(8).value(), ExactFraction::zero());
        assert_eq!("1T".parse::<SdWord>().unwrap().value(), ef("0.25"));
    }

    #[test]
    fn parse_and_format() {
        let w: SdWord = "10T".parse().unwrap();
        assert_eq!(w.values(), vec![1, 0, -1]);
        assert_eq!(w.value(), ef("0.375"));
        assert_eq!("0000".parse::<SdWord>().unwrap(), SdWord::zero(4));
        assert_eq!("".parse::<SdWord>(), Err(Error::EmptyDigits));
        assert_eq!("1x".parse::<SdWord>(), Err(Error::BadDigitChar('x')));
    }

    #[test]
    fn recoding_examples() {
        assert_eq!(SdWord::from_fixed(&ef("0.5"), 4).unwrap().values(), vec![1, 0, 0, 0]);
        assert_eq!(SdWord::from_fixed(&ef("-0.25"), 4).unwrap().values(), vec![0, -1, 0, 0]);
        assert!(SdWord::from_fixed(&ef("1"), 4).is_err());
        assert!(SdWord::from_fixed(&ef("0.03125"), 4).is_err());
    }

    #[test]
    fn recoding_round_trip_exhaustive_n8() {
        for k in -255i64..=255 {
            let f = ExactFraction::new(k, 8);
            let w = SdWord::from_fixed(&f, 8).unwrap();
            assert_eq!(w.value(), f);
        }
    }

    #[test]
    fn fixed_point_strings() {
        let q: FixedPoint = "11.1001".parse().unwrap();
        assert_eq!(q.value(), ef("-0.4375"));
        assert_eq!(q.to_string(), "11.1001");
        assert_eq!(q.bit(-1), true);
        assert_eq!(q.bit(2), false);
        assert_eq!(q.bit(4), true);
        assert_eq!(q.truncate(2).to_string(), "11.1000");
        assert_eq!(q.with_fb(2).to_string(), "11.10");
        let z = FixedPoint::zero(2, 0).unwrap();
        assert_eq!(z.to_string(), "00.");
        assert_eq!(FixedPoint::from_exact(&ef("-1"), 1, 4).unwrap().to_string(), "1.0000");
        assert!(FixedPoint::from_exact(&ef("1"), 1, 4).is_err());
    }

    proptest! {
        #[test]
        fn sd_value_is_bounded(vals in proptest::collection::vec(-1i64..=1, 1..40)) {
            let w = SdWord::from_values(&vals).unwrap();
            let n = vals.len() as i64;
            let bound = ExactFraction::one() - ExactFraction::pow2(-n);
            prop_assert!(w.value().abs() <= bound);
        }

        #[test]
        fn parse_format_identity(vals in proptest::collection::vec(-1i64..=1, 1..40)) {
            let w = SdWord::from_values(&vals).unwrap();
            let s = w.to_string();
            prop_assert_eq!(s.parse::<SdWord>().unwrap().to_string(), s);
        }

        #[test]
        fn recoding_inverts_value(k in -((1i64 << 20) - 1)..(1i64 << 20)) {
            let f = ExactFraction::new(k, 20);
            let w = SdWord::from_fixed(&f, 20).unwrap();
            prop_assert_eq!(w.value(), f.clone());
            prop_assert_eq!(SdWord::from_fixed(&w.value(), 20).unwrap(), w);
        }

        #[test]
        fn fixed_point_exact_round_trip(raw in -(1i64 << 30)..(1i64 << 30), fb in 0u32..40) {
            let v = ExactFraction::new(raw, 30);
            if let Ok(fp) = FixedPoint::from_exact(&v, 2, fb) {
                prop_assert_eq!(fp.value(), v.clone());
                prop_assert!(fb >= v.scale());
            } else {
                prop_assert!(fb < v.scale() || v.abs() >= ExactFraction::from_int(2));
            }
        }
    }
}
