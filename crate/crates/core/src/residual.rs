//! Carry-save residual words and the bit- and word-level adder cells used
//! to build them.

use serde::Serialize;

use crate::error::Result;
use crate::exact::ExactFraction;
use crate::sdnum::FixedPoint;

/// One-bit full adder: `(sum, carry)`.
pub fn full_adder(a: bool, b: bool, c: bool) -> (bool, bool) {
    (a ^ b ^ c, (a & b) | (a & c) | (b & c))
}

/// One-bit half adder: `(sum, carry)`.
pub fn half_adder(a: bool, b: bool) -> (bool, bool) {
    (a ^ b, a & b)
}

/// A row of full adders over three words of identical shape. The carry word
/// is already shifted one position up; the bit shifted out of the sign
/// position is discarded.
pub fn csa_row(a: &FixedPoint, b: &FixedPoint, c: &FixedPoint) -> Result<(FixedPoint, FixedPoint)> {
    a.same_shape(b)?;
    a.same_shape(c)?;
    let (x, y, z) = (a.raw(), b.raw(), c.raw());
    let sum = x ^ y ^ z;
    let carry = ((x & y) | (x & z) | (y & z)) << 1;
    Ok((
        FixedPoint::from_raw_unchecked(sum, a.ib(), a.fb()),
        FixedPoint::from_raw_unchecked(carry, a.ib(), a.fb()),
    ))
}

/// Sets (ORs in) the bit at datapath position `pos`.
pub fn set_bit(w: &FixedPoint, pos: i32, bit: bool) -> FixedPoint {
    if !bit {
        return *w;
    }
    let idx = w.fb() as i32 - pos;
    debug_assert!(idx >= 0 && (idx as u32) < w.width());
    FixedPoint::from_raw_unchecked(w.raw() | (1i128 << idx), w.ib(), w.fb())
}

/// Keeps only bits at positions `>= from` (the low part of a word).
pub fn low_part(w: &FixedPoint, from: i32) -> FixedPoint {
    let idx = w.fb() as i32 - from + 1;
    if idx <= 0 {
        return FixedPoint::from_raw_unchecked(0, w.ib(), w.fb());
    }
    let mask = if idx >= 127 { -1i128 } else { (1i128 << idx) - 1 };
    FixedPoint::from_raw_unchecked(w.raw() & mask, w.ib(), w.fb())
}

/// Left shift by one (multiplication by two), re-wired so that the top bit
/// falls off and the word keeps its shape.
pub fn shl1(w: &FixedPoint) -> FixedPoint {
    FixedPoint::from_raw_unchecked(w.raw() << 1, w.ib(), w.fb())
}

/// Selector output for one operand word: `d * operand * 2^-shift` placed in
/// a `(frame_ib, frame_fb)` frame. Digit 1 passes the operand, 0 gives zero,
/// and -1 gives the bitwise complement over the operand's own positions; the
/// missing unit for the negation is returned separately and belongs at
/// position `operand.fb() + shift`, which is the term's least significant
/// position.
pub fn selector(
    operand: &FixedPoint,
    d: crate::sdnum::SignedDigit,
    shift: u32,
    frame_ib: u32,
    frame_fb: u32,
) -> (FixedPoint, bool) {
    let lsb = operand.fb() + shift;
    debug_assert!(frame_fb >= lsb, "frame too narrow for the selector term");
    let up = frame_fb - lsb;
    let term = operand.raw() << up;
    match d.value() {
        0 => (FixedPoint::from_raw_unchecked(0, frame_ib, frame_fb), false),
        1 => (FixedPoint::from_raw_unchecked(term, frame_ib, frame_fb), false),
        _ => {
            let below = (1i128 << up) - 1;
            (
                FixedPoint::from_raw_unchecked(!term & !below, frame_ib, frame_fb),
                true,
            )
        }
    }
}

/// Redundant pair `(sum, carry)` whose modular sum is the represented value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CarrySave {
    pub sum: FixedPoint,
    pub carry: FixedPoint,
}

impl CarrySave {
    pub fn new(sum: FixedPoint, carry: FixedPoint) -> Result<Self> {
        sum.same_shape(&carry)?;
        Ok(CarrySave { sum, carry })
    }

    pub fn zero(ib: u32, fb: u32) -> Result<Self> {
        let z = FixedPoint::zero(ib, fb)?;
        Ok(CarrySave { sum: z, carry: z })
    }

    pub fn ib(&self) -> u32 {
        self.sum.ib()
    }

    pub fn fb(&self) -> u32 {
        self.sum.fb()
    }

    /// The represented word: `sum + carry` modulo `2^ib`.
    pub fn resolve(&self) -> FixedPoint {
        FixedPoint::from_raw_unchecked(self.sum.raw() + self.carry.raw(), self.ib(), self.fb())
    }

    pub fn value(&self) -> ExactFraction {
        self.resolve().value()
    }

    /// Both vectors re-expressed with `fb` fractional bits (truncating or
    /// zero-extending each one independently).
    pub fn with_fb(&self, fb: u32) -> CarrySave {
        CarrySave {
            sum: self.sum.with_fb(fb),
            carry: self.carry.with_fb(fb),
        }
    }

    /// Truncates both vectors to `keep` fractional bits without changing the
    /// frame.
    pub fn truncate(&self, keep: u32) -> CarrySave {
        CarrySave {
            sum: self.sum.truncate(keep),
            carry: self.carry.truncate(keep),
        }
    }

    pub fn shl1(&self) -> CarrySave {
        CarrySave {
            sum: shl1(&self.sum),
            carry: shl1(&self.carry),
        }
    }
}
