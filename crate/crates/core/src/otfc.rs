//! On-the-fly conversion of an MSDF signed-digit stream into two's
//! complement, one digit per cycle and without carry propagation.

use crate::error::{Error, Result};
use crate::sdnum::{FixedPoint, SignedDigit};

/// The Q / QM register pair. `QM = Q - 2^-pos` holds after every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OtfcState {
    q: FixedPoint,
    qm: FixedPoint,
    pos: u32,
}

impl OtfcState {
    /// Q = "00...0", QM = "11...1" (Q minus one unit in the last integer bit).
    pub fn new(ib: u32) -> Result<Self> {
        if ib == 0 {
            return Err(Error::InvalidParams("OTFC needs at least one integer bit".into()));
        }
        Ok(OtfcState {
            q: FixedPoint::zero(ib, 0)?,
            qm: FixedPoint::from_raw(-1, ib, 0)?,
            pos: 0,
        })
    }

    pub fn append(&self, d: SignedDigit) -> OtfcState {
        let (q, qm) = match d.value() {
            1 => (self.q.append_bit(true), self.q.append_bit(false)),
            0 => (self.q.append_bit(false), self.qm.append_bit(true)),
            _ => (self.qm.append_bit(true), self.qm.append_bit(false)),
        };
        OtfcState {
            q,
            qm,
            pos: self.pos + 1,
        }
    }

    pub fn append_all(&self, digits: &[SignedDigit]) -> OtfcState {
        digits.iter().fold(*self, |s, &d| s.append(d))
    }

    /// The converted value Q.
    pub fn value(&self) -> FixedPoint {
        self.q
    }

    pub fn qm(&self) -> FixedPoint {
        self.qm
    }

    /// Number of digits consumed (the fractional length of Q).
    pub fn pos(&self) -> u32 {
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactFraction;
    use crate::sdnum::SdWord;
    use proptest::prelude::*;

    fn ulp_holds(s: &OtfcState) -> bool {
        s.value().value() - s.qm().value() == ExactFraction::pow2(-(s.pos() as i64))
    }

    #[test]
    fn init_registers() {
        let s = OtfcState::new(2).unwrap();
        assert_eq!(s.value().to_bit_string(), "00.");
        assert_eq!(s.qm().to_bit_string(), "11.");
        assert!(s.value().value().is_zero());
        assert!(ulp_holds(&s));
        assert!(OtfcState::new(0).is_err());
    }

    #[test]
    fn short_sequences() {
        let s = OtfcState::new(2).unwrap().append(SignedDigit::ONE);
        assert_eq!(s.value().value(), "0.5".parse().unwrap());
        assert!(s.qm().value().is_zero());
        let s = s.append(SignedDigit::NEG_ONE);
        assert_eq!(s.value().value(), "1T".parse::<SdWord>().unwrap().value());
        assert!(s.qm().value().is_zero());
        let before = s.value().value();
        let s = (0..5).fold(s, |s, _| s.append(SignedDigit::ZERO));
        assert_eq!(s.value().value(), before);
        assert_eq!(s.value().width(), 2 + 7);
    }

    #[test]
    fn table_operands_convert() {
        let x = SdWord::from_values(&[1, 1, 0, -1, 0, -1, -1, 0, 1, 1, -1, 0, -1, 1, 0, 0]).unwrap();
        let y = SdWord::from_values(&[-1, 1, -1, 1, 0, 0, -1, 1, 0, 1, -1, 1, 1, -1, 0, -1]).unwrap();
        let init = OtfcState::new(2).unwrap();
        let qx = init.append_all(x.digits()).value().value();
        let qy = init.append_all(y.digits()).value().value();
        assert_eq!(qx, "0.66644287109375".parse().unwrap());
        assert_eq!(qy, "-0.3156280517578125".parse().unwrap());
        assert!((qy.to_f64() - -0.31562805175781).abs() < 1e-14);
    }

    #[test]
    fn exhaustive_up_to_eight_digits() {
        for n in 1..=8u32 {
            for code in 0..3u32.pow(n) {
                let mut c = code;
                let digits: Vec<SignedDigit> = (0..n)
                    .map(|_| {
                        let d = SignedDigit::ALL[(c % 3) as usize];
                        c /= 3;
                        d
                    })
                    .collect();
                let s = OtfcState::new(2).unwrap().append_all(&digits);
                assert_eq!(s.value().value(), SdWord::new(digits).value());
                assert!(ulp_holds(&s));
            }
        }
    }

    proptest! {
        #[test]
        fn converts_random_streams(vals in proptest::collection::vec(-1i64..=1, 0..100)) {
            let w = SdWord::from_values(&vals).unwrap();
            let mut s = OtfcState::new(2).unwrap();
            for (i, &d) in w.digits().iter().enumerate() {
                s = s.append(d);
                prop_assert!(ulp_holds(&s));
                prop_assert_eq!(s.value().value(), w.prefix_value(i + 1));
                prop_assert_eq!(s.value().fb(), i as u32 + 1);
            }
        }
    }
}
