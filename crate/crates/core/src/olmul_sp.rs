//! Radix-2 serial-parallel online multiplier: x arrives one signed digit per
//! cycle while the constant Y is available as a whole two's-complement word.
//! Online delay two, one full-adder level per cycle and no on-the-fly
//! converters for the operands.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact::ExactFraction;
use crate::otfc::OtfcState;
use crate::pipeline::{slice_schedule, sp_row_structural, Backend, SliceSchedule, StageWidths};
use crate::residual::{csa_row, selector, set_bit, CarrySave};
use crate::sdnum::{FixedPoint, SdWord, SignedDigit};
use crate::selection::{estimate_v, m_block, m_block_behavioral, selm, MultiplierKind, RadixParams};
use crate::trace::{Phase, Trace, TraceRow, WidthMode};

/// Registers carried between cycles. There is deliberately no operand
/// converter; `za` only records the product for the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpRegisters {
    pub j: i32,
    pub za: OtfcState,
    pub w: CarrySave,
}

impl SpRegisters {
    pub fn new(j: i32) -> Self {
        SpRegisters {
            j,
            za: OtfcState::new(2).expect("two integer bits are valid"),
            w: CarrySave::zero(2, 0).expect("empty residual"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpCycle {
    pub regs: SpRegisters,
    pub z: Option<SignedDigit>,
    pub row: TraceRow,
}

/// Checks and widens a constant operand to `(1, n)`.
pub fn constant_operand(y: &FixedPoint, n: u32) -> Result<FixedPoint> {
    if y.ib() != 1 || y.fb() > n {
        let v = y.value();
        return FixedPoint::from_exact(&v, 1, n).map_err(|_| Error::OutOfRange {
            value: v.to_string(),
            what: "the constant operand range [-1, 1) with n fractional bits",
        });
    }
    Ok(y.with_fb(n))
}

/// One cycle: `v[j] = 2 w[j] + x_{j+3} Y 2^-2` via a single full-adder row,
/// then selection and residual update as in the serial-serial design.
pub fn sp_cycle(
    params: &RadixParams,
    regs: &SpRegisters,
    y: &FixedPoint,
    xd: SignedDigit,
    stage: &StageWidths,
    backend: Backend,
) -> Result<SpCycle> {
    let j = regs.j;
    if stage.j != j {
        return Err(Error::MalformedTrace(format!(
            "stage for cycle {} applied at cycle {j}",
            stage.j
        )));
    }
    let w = stage.v_fb;
    let r = regs.w.with_fb(stage.residual_fb).with_fb(w);
    let mut next = *regs;
    let (v, x_in, y_ca) = if stage.phase == Phase::Final {
        if xd != SignedDigit::ZERO {
            return Err(Error::NonzeroFinalInput(j));
        }
        (r, None, None)
    } else {
        let (b, c_x) = selector(y, xd, params.delta, 2, w);
        let v = match backend {
            Backend::Behavioral => {
                let (vs, vc) = csa_row(&r.sum, &r.carry, &b)?;
                CarrySave::new(vs, set_bit(&vc, (y.fb() + params.delta) as i32, c_x))?
            }
            Backend::Structural => sp_row_structural(stage, &b, c_x, &r)?,
        };
        (v, Some(xd), Some(*y))
    };
    let (z, vhat) = if stage.phase == Phase::Init {
        next.w = v.shl1();
        (None, None)
    } else {
        let e = estimate_v(&v.sum, &v.carry, params)?;
        let z = selm(&e)?;
        next.w = match backend {
            Backend::Behavioral => m_block_behavioral(&v, z, &e)?,
            Backend::Structural => m_block(&v, z, &e)?,
        };
        next.za = regs.za.append(z);
        (Some(z), Some(e))
    };
    next.j = j + 1;
    let row = TraceRow {
        j,
        phase: stage.phase,
        x_in,
        y_in: None,
        x_ca: None,
        y_ca,
        v,
        vhat,
        z,
        z_partial: z.map(|_| next.za.value()),
        w_next: next.w,
    };
    Ok(SpCycle { regs: next, z, row })
}

/// A serial-parallel multiplication in progress.
#[derive(Clone, Debug)]
pub struct MulSpState {
    params: RadixParams,
    n: u32,
    y: FixedPoint,
    backend: Backend,
    schedule: Arc<SliceSchedule>,
    regs: SpRegisters,
    product: Vec<SignedDigit>,
}

impl MulSpState {
    pub fn new(y: &FixedPoint, n: u32) -> Result<Self> {
        Self::with_backend(y, n, Backend::Behavioral)
    }

    /// Builds the engine from an exact constant in [-1, 1).
    pub fn from_value(y: &ExactFraction, n: u32) -> Result<Self> {
        let lo = ExactFraction::from_int(-1);
        if *y < lo || *y >= ExactFraction::one() {
            return Err(Error::OutOfRange {
                value: y.to_string(),
                what: "the constant operand range [-1, 1)",
            });
        }
        Self::new(&FixedPoint::from_exact(y, 1, n)?, n)
    }

    pub fn with_backend(y: &FixedPoint, n: u32, backend: Backend) -> Result<Self> {
        let params = RadixParams::serial_parallel();
        let schedule = slice_schedule(&params, n, WidthMode::Full)?;
        let y = constant_operand(y, n)?;
        Ok(MulSpState {
            params,
            n,
            y,
            backend,
            schedule: Arc::new(schedule),
            regs: SpRegisters::new(-(params.delta as i32)),
            product: Vec::with_capacity(n as usize),
        })
    }

    pub fn y(&self) -> &FixedPoint {
        &self.y
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn j(&self) -> i32 {
        self.regs.j
    }

    pub fn is_done(&self) -> bool {
        self.regs.j >= self.n as i32
    }

    pub fn phase(&self) -> Option<Phase> {
        self.schedule.stage(self.regs.j).map(|s| s.phase)
    }

    pub fn registers(&self) -> &SpRegisters {
        &self.regs
    }

    pub fn schedule(&self) -> &SliceSchedule {
        &self.schedule
    }

    pub fn product(&self) -> SdWord {
        SdWord::new(self.product.clone())
    }

    fn advance(&mut self, xd: SignedDigit) -> Result<(Option<SignedDigit>, TraceRow)> {
        let stage = self
            .schedule
            .stage(self.regs.j)
            .ok_or(Error::PastEnd(self.n as i32 - 1))?;
        let c = sp_cycle(&self.params, &self.regs, &self.y, xd, stage, self.backend)?;
        self.regs = c.regs;
        if let Some(z) = c.z {
            self.product.push(z);
        }
        Ok((c.z, c.row))
    }

    pub fn step(&self, xd: SignedDigit) -> Result<(MulSpState, Option<SignedDigit>, TraceRow)> {
        let mut s = self.clone();
        let (z, row) = s.advance(xd)?;
        Ok((s, z, row))
    }
}

/// Runs a whole multiplication: n + 2 cycles, n product digits.
pub fn mul_sp_run(x: &SdWord, y: &FixedPoint) -> Result<(SdWord, Trace)> {
    mul_sp_run_with(x, y, Backend::Behavioral)
}

pub fn mul_sp_run_with(x: &SdWord, y: &FixedPoint, backend: Backend) -> Result<(SdWord, Trace)> {
    let n = x.len() as u32;
    let mut s = MulSpState::with_backend(y, n, backend)?;
    let delta = s.params.delta as i32;
    let mut rows = Vec::with_capacity((n as i32 + delta) as usize);
    while !s.is_done() {
        let i = (s.j() + delta + 1) as usize;
        let (_, row) = s.advance(x.digit(i))?;
        rows.push(row);
    }
    let product = s.product();
    Ok((
        product.clone(),
        Trace {
            kind: MultiplierKind::SerialParallel,
            n,
            mode: WidthMode::Full,
            p: s.schedule.p,
            rows,
            product,
        },
    ))
}
