//! Residual bounds, selection constants, the V-block estimate, the SELM
//! digit table and the M-block digit subtraction shared by both multipliers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactFraction;
use crate::residual::{low_part, shl1, CarrySave};
use crate::sdnum::{FixedPoint, SignedDigit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierKind {
    SerialSerial,
    SerialParallel,
}

impl MultiplierKind {
    /// Default online delay of the implemented designs.
    pub fn delta(self) -> u32 {
        match self {
            MultiplierKind::SerialSerial => 3,
            MultiplierKind::SerialParallel => 2,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            MultiplierKind::SerialSerial => "ss",
            MultiplierKind::SerialParallel => "sp",
        }
    }
}

/// Radix, digit set and estimate geometry of one design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadixParams {
    pub r: u32,
    pub a: u32,
    pub delta: u32,
    pub t: u32,
    pub ib: u32,
    pub kind: MultiplierKind,
}

impl RadixParams {
    pub fn serial_serial() -> Self {
        RadixParams {
            r: 2,
            a: 1,
            delta: 3,
            t: 2,
            ib: 2,
            kind: MultiplierKind::SerialSerial,
        }
    }

    pub fn serial_parallel() -> Self {
        RadixParams {
            r: 2,
            a: 1,
            delta: 2,
            t: 2,
            ib: 2,
            kind: MultiplierKind::SerialParallel,
        }
    }

    pub fn for_kind(kind: MultiplierKind) -> Self {
        match kind {
            MultiplierKind::SerialSerial => Self::serial_serial(),
            MultiplierKind::SerialParallel => Self::serial_parallel(),
        }
    }

    /// Same digit set and kind with a different `(t, delta)`.
    pub fn with_t_delta(kind: MultiplierKind, t: u32, delta: u32) -> Result<Self> {
        let p = RadixParams {
            t,
            delta,
            ..Self::for_kind(kind)
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r != 2 || self.a != 1 {
            return Err(Error::InvalidParams(format!(
                "only radix 2 with digit set {{-1,0,1}} is implemented (r={}, a={})",
                self.r, self.a
            )));
        }
        if 2 * self.a < self.r {
            return Err(Error::InvalidParams("digit set is not redundant".into()));
        }
        if self.delta == 0 || self.t == 0 || self.delta > 32 || self.t > 32 {
            return Err(Error::InvalidParams(format!(
                "delta={} and t={} must lie in 1..=32",
                self.delta, self.t
            )));
        }
        if self.ib != 2 {
            return Err(Error::InvalidParams("estimate needs 2 integer bits".into()));
        }
        Ok(())
    }

    /// Redundancy factor a / (r - 1).
    pub fn rho(&self) -> ExactFraction {
        ExactFraction::from_int(self.a as i64)
    }

    /// Largest value of the input term added to the shifted residual:
    /// `2 a r^-delta` for serial-serial (two operand terms) and
    /// `a r^-delta` for serial-parallel.
    pub fn h1_max(&self) -> ExactFraction {
        let terms = match self.kind {
            MultiplierKind::SerialSerial => 2,
            MultiplierKind::SerialParallel => 1,
        };
        ExactFraction::from_int(terms * self.a as i64) * ExactFraction::pow2(-(self.delta as i64))
    }
}

/// Residual bounds and selection constants of one parameter set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedBounds {
    pub params: RadixParams,
    pub omega_hi: ExactFraction,
    pub omega_lo: ExactFraction,
    /// `m[0] = m_0`, `m[1] = m_1`: select 1 iff estimate >= m_1, -1 iff
    /// estimate < m_0, otherwise 0.
    pub m: [ExactFraction; 2],
    pub vhat_min: ExactFraction,
    pub vhat_max: ExactFraction,
    /// Lower end of the estimate gap `v - vhat`.
    pub e_min: ExactFraction,
    /// Exclusive upper end of the gap: `v - vhat <= e_max - ulp`.
    pub e_max: ExactFraction,
    pub h1_max: ExactFraction,
    pub h1_min: ExactFraction,
    /// Quantized selection-interval ends `(k, U^_k)` and `(k, L^_k)`.
    pub u_hat: Vec<(i32, ExactFraction)>,
    pub l_hat: Vec<(i32, ExactFraction)>,
}

fn omega_hi(p: &RadixParams) -> ExactFraction {
    // -(max H1 + H2(a)) / (r - 1) with H2(a) = -a
    p.rho() - p.h1_max()
}

fn u_hat(p: &RadixParams, k: i32) -> ExactFraction {
    (omega_hi(p) + ExactFraction::from_int(k as i64) - ExactFraction::pow2(-(p.t as i64)))
        .floor_to(p.t)
}

fn l_hat(p: &RadixParams, k: i32) -> ExactFraction {
    (-omega_hi(p) + ExactFraction::from_int(k as i64)).ceil_to(p.t)
}

/// Whether selection constants exist: `U^_{k-1} - L^_k >= 0` for every
/// adjacent digit pair `(k-1, k)`.
pub fn feasible(p: &RadixParams) -> bool {
    let a = p.a as i32;
    (1 - a + 1..=a).all(|k| u_hat(p, k - 1) >= l_hat(p, k))
}

/// Smallest feasible `(t, delta)`, searching delta outward from 1 and, for
/// each delta, t from 1.
pub fn minimal_feasible(kind: MultiplierKind) -> Option<(u32, u32)> {
    for delta in 1..=16 {
        for t in 1..=16 {
            let p = RadixParams::with_t_delta(kind, t, delta).ok()?;
            if feasible(&p) {
                return Some((t, delta));
            }
        }
    }
    None
}

pub fn derive_bounds(p: &RadixParams) -> Result<DerivedBounds> {
    p.validate()?;
    if !feasible(p) {
        return Err(Error::InvalidParams(format!(
            "no selection constants exist for t={} and delta={}",
            p.t, p.delta
        )));
    }
    let a = p.a as i32;
    let omega_hi = omega_hi(p);
    let omega_lo = -omega_hi.clone();
    let h1_max = p.h1_max();
    let h1_min = -h1_max.clone();
    let e_min = ExactFraction::zero();
    let e_max = ExactFraction::pow2(1 - p.t as i64);
    let m = [u_hat(p, -1), u_hat(p, 0)];
    let two = ExactFraction::from_int(2);
    let v_max = &two * &omega_hi + h1_max.clone();
    let v_min = &two * &omega_lo + h1_min.clone();
    let vhat_max = v_max.floor_to(p.t);
    // the gap is strictly below e_max, so the estimate stays strictly above
    // v_min - e_max
    let vhat_min = (v_min - e_max.clone()).floor_to(p.t) + ExactFraction::pow2(-(p.t as i64));
    Ok(DerivedBounds {
        params: *p,
        omega_hi,
        omega_lo,
        m,
        vhat_min,
        vhat_max,
        e_min,
        e_max,
        h1_max,
        h1_min,
        u_hat: (-a..=a).map(|k| (k, u_hat(p, k))).collect(),
        l_hat: (-a..=a).map(|k| (k, l_hat(p, k))).collect(),
    })
}

/// The truncated estimate `vhat`, `ib` integer and `t` fractional bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Estimate {
    bits: FixedPoint,
}

impl Estimate {
    pub fn from_bits(bits: FixedPoint) -> Self {
        Estimate { bits }
    }

    pub fn bits(&self) -> FixedPoint {
        self.bits
    }

    pub fn value(&self) -> ExactFraction {
        self.bits.value()
    }
}

/// V block: truncate both vectors to `t` fractional bits and add them over
/// the kept `ib + t` positions.
pub fn estimate_v(ws: &FixedPoint, wc: &FixedPoint, p: &RadixParams) -> Result<Estimate> {
    ws.same_shape(wc)?;
    if ws.ib() != p.ib {
        return Err(Error::WidthMismatch(
            format!("{} integer bits", ws.ib()),
            format!("{} integer bits", p.ib),
        ));
    }
    let s = ws.with_fb(p.t);
    let c = wc.with_fb(p.t);
    Ok(Estimate {
        bits: s.wrapping_add(&c)?,
    })
}

/// SELM: the product digit from the three most significant estimate bits
/// `v_-1 v_0 . v_1`.
pub fn selm(e: &Estimate) -> Result<SignedDigit> {
    let b = e.bits;
    if b.ib() != 2 || b.fb() < 1 {
        return Err(Error::EstimateOutOfRange(b.to_string()));
    }
    Ok(match (b.bit(-1), b.bit(0), b.bit(1)) {
        (false, true, _) | (false, false, true) => SignedDigit::ONE,
        (false, false, false) | (true, true, true) => SignedDigit::ZERO,
        (true, true, false) | (true, false, _) => SignedDigit::NEG_ONE,
    })
}

/// Selection by comparison with the constants; agrees with [`selm`].
pub fn select_by_constants(vhat: &ExactFraction, bounds: &DerivedBounds) -> SignedDigit {
    if *vhat >= bounds.m[1] {
        SignedDigit::ONE
    } else if *vhat >= bounds.m[0] {
        SignedDigit::ZERO
    } else {
        SignedDigit::NEG_ONE
    }
}

fn check_selection(z: SignedDigit, e: &Estimate) -> Result<()> {
    if selm(e)? != z {
        return Err(Error::SelectionViolation {
            digit: z.value(),
            estimate: e.bits.to_string(),
        });
    }
    Ok(())
}

/// M block, gate-level form. The sum vector's positions -1..2 are replaced
/// by the sign-extended `v_0* v_1 v_2` with `v_0* = v_0 xor |z|`, the carry
/// vector's positions -1..2 are cleared, and both are shifted left one
/// place. Returns the next residual pair.
pub fn m_block(v: &CarrySave, z: SignedDigit, e: &Estimate) -> Result<CarrySave> {
    check_selection(z, e)?;
    let eb = e.bits;
    if eb.fb() < 2 || v.ib() != 2 {
        return Err(Error::EstimateOutOfRange(eb.to_string()));
    }
    let v0 = eb.bit(0) ^ z.magnitude();
    let top = [(-1, v0), (0, v0), (1, eb.bit(1)), (2, eb.bit(2))];
    let mut sum = low_part(&v.sum, 3);
    for (pos, bit) in top {
        sum = crate::residual::set_bit(&sum, pos, bit);
    }
    let carry = low_part(&v.carry, 3);
    CarrySave::new(shl1(&sum), shl1(&carry))
}

/// M block, arithmetic form: the top part becomes `vhat - z` and the result
/// is doubled. Value-identical to [`m_block`].
pub fn m_block_behavioral(v: &CarrySave, z: SignedDigit, e: &Estimate) -> Result<CarrySave> {
    check_selection(z, e)?;
    let fb = v.fb();
    let top = e.value() - ExactFraction::from_int(z.value() as i64);
    let top = FixedPoint::from_exact(&top, v.ib(), fb)?;
    let sum = top.wrapping_add(&low_part(&v.sum, 3))?;
    let carry = low_part(&v.carry, 3);
    CarrySave::new(shl1(&sum), shl1(&carry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ef(s: &str) -> ExactFraction {
        s.parse().unwrap()
    }

    fn fp(s: &str) -> FixedPoint {
        s.parse().unwrap()
    }

    #[test]
    fn serial_serial_bounds() {
        let b = derive_bounds(&RadixParams::serial_serial()).unwrap();
        assert_eq!(b.omega_hi, ef("0.75"));
        assert_eq!(b.omega_lo, ef("-0.75"));
        assert_eq!(b.m, [ef("-0.5"), ef("0.5")]);
        assert_eq!(b.vhat_min, ef("-2"));
        assert_eq!(b.vhat_max, ef("1.75"));
        assert_eq!(b.e_max, ef("0.5"));
        assert_eq!(b.h1_max, ef("0.25"));
    }

    #[test]
    fn serial_parallel_matches_serial_serial() {
        let ss = derive_bounds(&RadixParams::serial_serial()).unwrap();
        let sp = derive_bounds(&RadixParams::serial_parallel()).unwrap();
        assert_eq!(ss.m, sp.m);
        assert_eq!((ss.vhat_min, ss.vhat_max), (sp.vhat_min, sp.vhat_max));
        assert_eq!(sp.omega_hi, ef("0.75"));
    }

    #[test]
    fn minimal_pairs() {
        assert_eq!(minimal_feasible(MultiplierKind::SerialParallel), Some((2, 2)));
        assert_eq!(minimal_feasible(MultiplierKind::SerialSerial), Some((2, 3)));
        let t1 = RadixParams::with_t_delta(MultiplierKind::SerialSerial, 1, 3).unwrap();
        assert!(!feasible(&t1));
        assert!(derive_bounds(&t1).is_err());
    }

    #[test]
    fn estimate_examples() {
        let p = RadixParams::serial_serial();
        let e = estimate_v(&fp("00.0100"), &fp("00.0100"), &p).unwrap();
        assert_eq!(e.value(), ef("0.5"));
        let (ws, wc) = (fp("00.0111"), fp("00.0001"));
        let e = estimate_v(&ws, &wc, &p).unwrap();
        assert_eq!(e.value(), ef("0.25"));
        let v = ws.value() + wc.value();
        assert_eq!(v, ef("0.5"));
        let gap = v - e.value();
        assert!(gap < derive_bounds(&p).unwrap().e_max);
        let e = estimate_v(&fp("11.1000"), &fp("00.0000"), &p).unwrap();
        assert_eq!(e.value(), ef("-0.5"));
        assert!(estimate_v(&fp("00.01"), &fp("00.010"), &p).is_err());
    }

    #[test]
    fn selm_table() {
        let cases = [
            ("01.10", 1),
            ("01.00", 1),
            ("00.10", 1),
            ("00.00", 0),
            ("11.10", 0),
            ("11.00", -1),
            ("10.10", -1),
            ("10.00", -1),
        ];
        for (bits, z) in cases {
            assert_eq!(selm(&Estimate::from_bits(fp(bits))).unwrap().value(), z, "{bits}");
        }
        assert!(selm(&Estimate::from_bits(fp("0.10"))).is_err());
    }

    #[test]
    fn selm_matches_constants_on_every_estimate() {
        let b = derive_bounds(&RadixParams::serial_serial()).unwrap();
        for raw in -8i128..8 {
            let e = Estimate::from_bits(FixedPoint::from_raw(raw, 2, 2).unwrap());
            assert_eq!(selm(&e).unwrap(), select_by_constants(&e.value(), &b));
        }
    }

    #[test]
    fn m_block_examples() {
        let p = RadixParams::serial_serial();
        let v = CarrySave::new(fp("00.1000"), fp("00.0000")).unwrap();
        let e = estimate_v(&v.sum, &v.carry, &p).unwrap();
        let w = m_block(&v, SignedDigit::ONE, &e).unwrap();
        assert_eq!(w.value(), ef("-1"));
        let v = CarrySave::zero(2, 4).unwrap();
        let e = estimate_v(&v.sum, &v.carry, &p).unwrap();
        assert_eq!(m_block(&v, SignedDigit::ZERO, &e).unwrap(), v);
        assert!(matches!(
            m_block(&v, SignedDigit::ONE, &e),
            Err(Error::SelectionViolation { .. })
        ));
    }

    #[test]
    fn table_row_three_update() {
        // v[3] = 00.1001100011 selects 1; with inputs x_7 = 0, y_7 = 1 the next
        // v[4] must equal 11.01000110110.
        let p = RadixParams::serial_serial();
        let v = CarrySave::new(fp("00.1001100011"), fp("00.0000000000")).unwrap();
        let e = estimate_v(&v.sum, &v.carry, &p).unwrap();
        let z = selm(&e).unwrap();
        assert_eq!(z, SignedDigit::ONE);
        let w = m_block(&v, z, &e).unwrap();
        assert_eq!(w.value(), ef("2") * (v.value() - ef("1")));
        // x[4] has 7 digits 1101 0TT -> 0.1010101; term = x[4] * y_8 / 8
        let x4 = ef("0.6640625");
        let v4 = w.value() + x4 * ef("0.125");
        assert_eq!(v4, fp("11.01000110110").value());
    }

    proptest! {
        #[test]
        fn structural_and_behavioral_m_block_agree(s in any::<i32>(), c in any::<i32>()) {
            let p = RadixParams::serial_serial();
            let sum = FixedPoint::from_raw(s as i128, 2, 30).unwrap();
            // M-block inputs come from a [4:2] row; any pair whose estimate is
            // reachable works
            let carry = FixedPoint::from_raw(c as i128, 2, 30).unwrap();
            let v = CarrySave::new(sum, carry).unwrap();
            let e = estimate_v(&sum, &carry, &p).unwrap();
            let z = selm(&e).unwrap();
            let a = m_block(&v, z, &e).unwrap();
            let b = m_block_behavioral(&v, z, &e).unwrap();
            prop_assert_eq!(a.sum, b.sum);
            prop_assert_eq!(a.carry, b.carry);
            let expect = (v.value() - ExactFraction::from_int(z.value() as i64)).shl(1);
            let expect = FixedPoint::from_exact(&expect.clone(), 8, 30)
                .unwrap()
                .with_ib(2);
            prop_assert_eq!(a.resolve(), expect);
        }
    }
}
