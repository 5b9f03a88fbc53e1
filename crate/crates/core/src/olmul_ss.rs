//! Radix-2 serial-serial online multiplier: both operands arrive one signed
//! digit per cycle, most significant first, and one product digit leaves per
//! cycle after an online delay of three.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::otfc::OtfcState;
use crate::pipeline::{slice_schedule, ss_row_structural, Backend, SliceSchedule, StageWidths};
use crate::residual::{csa_row, selector, set_bit, CarrySave};
use crate::sdnum::{SdWord, SignedDigit};
use crate::selection::{estimate_v, m_block, m_block_behavioral, selm, MultiplierKind, RadixParams};
use crate::trace::{Phase, Trace, TraceRow, WidthMode};

/// Registers carried from one cycle to the next (and, in the pipelined
/// array, from one stage to the next).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SsRegisters {
    /// Index of the cycle these registers feed.
    pub j: i32,
    /// Converted x digits consumed so far, x[j].
    pub xa: OtfcState,
    /// Converted y digits consumed so far, y[j].
    pub ya: OtfcState,
    /// Converted product digits, z[j].
    pub za: OtfcState,
    /// Shifted residual pair `2 w[j]`.
    pub w: CarrySave,
}

fn otfc() -> OtfcState {
    OtfcState::new(2).expect("two integer bits are valid")
}

impl SsRegisters {
    pub fn new(j: i32) -> Self {
        SsRegisters {
            j,
            xa: otfc(),
            ya: otfc(),
            za: otfc(),
            w: CarrySave::zero(2, 0).expect("empty residual"),
        }
    }
}

/// Result of one cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsCycle {
    pub regs: SsRegisters,
    pub z: Option<SignedDigit>,
    pub row: TraceRow,
}

/// The same stage with every width at its natural (untruncated) value.
pub fn full_width_stage(stage: &StageWidths, delta: u32) -> StageWidths {
    if stage.phase == Phase::Final {
        return stage.clone();
    }
    let w = (stage.j + 2 * delta as i32 + 1) as u32;
    StageWidths {
        v_fb: w,
        x_fb: Some(w - delta - 1),
        y_fb: Some(w - delta),
        residual_fb: w - 2,
        truncating: false,
        ..stage.clone()
    }
}

/// One cycle of the serial-serial recurrence on the widths of `stage`.
///
/// During input cycles the selectors form `x[j] y_{j+4}` and
/// `y[j+1] x_{j+4}`, both scaled by 2^-3, and a [4:2] row adds them to the
/// shifted residual. The negation unit of the x term (`c_y`) enters the
/// first-level carry vector at its least significant position and that of
/// the y term (`c_x`) the output carry vector. In the last delta cycles the
/// residual registers pass straight to the V and M blocks.
pub fn ss_cycle(
    params: &RadixParams,
    regs: &SsRegisters,
    xd: SignedDigit,
    yd: SignedDigit,
    stage: &StageWidths,
    backend: Backend,
) -> Result<SsCycle> {
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
    let (v, x_in, y_in, x_ca, y_ca) = if stage.phase == Phase::Final {
        if xd != SignedDigit::ZERO || yd != SignedDigit::ZERO {
            return Err(Error::NonzeroFinalInput(j));
        }
        (r, None, None, None, None)
    } else {
        let (x_fb, y_fb) = match (stage.x_fb, stage.y_fb) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::MalformedTrace(format!("stage {j} lacks operand widths"))),
        };
        let shift = params.delta;
        next.ya = regs.ya.append(yd);
        let x_ca = regs.xa.value().with_fb(x_fb);
        let y_ca = next.ya.value().with_fb(y_fb);
        let (a, c_y) = selector(&x_ca, yd, shift, 2, w);
        let (b, c_x) = selector(&y_ca, xd, shift, 2, w);
        let v = match backend {
            Backend::Behavioral => {
                let (s1, c1) = csa_row(&a, &r.sum, &r.carry)?;
                let c1 = set_bit(&c1, (x_fb + shift) as i32, c_y);
                let (vs, vc) = csa_row(&s1, &c1, &b)?;
                let vc = set_bit(&vc, (y_fb + shift) as i32, c_x);
                CarrySave::new(vs, vc)?
            }
            Backend::Structural => ss_row_structural(stage, &a, &b, c_y, c_x, &r)?,
        };
        next.xa = regs.xa.append(xd);
        (v, Some(xd), Some(yd), Some(x_ca), Some(y_ca))
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
        y_in,
        x_ca,
        y_ca,
        v,
        vhat,
        z,
        z_partial: z.map(|_| next.za.value()),
        w_next: next.w,
    };
    Ok(SsCycle { regs: next, z, row })
}

/// A serial-serial multiplication in progress.
#[derive(Clone, Debug)]
pub struct MulSsState {
    params: RadixParams,
    n: u32,
    mode: WidthMode,
    backend: Backend,
    schedule: Arc<SliceSchedule>,
    regs: SsRegisters,
    product: Vec<SignedDigit>,
}

impl MulSsState {
    pub fn new(n: u32, mode: WidthMode) -> Result<Self> {
        Self::with_backend(n, mode, Backend::Behavioral)
    }

    pub fn with_backend(n: u32, mode: WidthMode, backend: Backend) -> Result<Self> {
        let params = RadixParams::serial_serial();
        let schedule = slice_schedule(&params, n, mode)?;
        Ok(MulSsState {
            params,
            n,
            mode,
            backend,
            schedule: Arc::new(schedule),
            regs: SsRegisters::new(-(params.delta as i32)),
            product: Vec::with_capacity(n as usize),
        })
    }

    pub fn params(&self) -> &RadixParams {
        &self.params
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mode(&self) -> WidthMode {
        self.mode
    }

    /// Working precision of the schedule.
    pub fn p(&self) -> u32 {
        self.schedule.p
    }

    pub fn schedule(&self) -> &SliceSchedule {
        &self.schedule
    }

    /// Index of the next cycle.
    pub fn j(&self) -> i32 {
        self.regs.j
    }

    pub fn is_done(&self) -> bool {
        self.regs.j >= self.n as i32
    }

    pub fn phase(&self) -> Option<Phase> {
        self.schedule.stage(self.regs.j).map(|s| s.phase)
    }

    pub fn registers(&self) -> &SsRegisters {
        &self.regs
    }

    pub fn product(&self) -> SdWord {
        SdWord::new(self.product.clone())
    }

    fn advance(&mut self, xd: SignedDigit, yd: SignedDigit) -> Result<(Option<SignedDigit>, TraceRow)> {
        let stage = self
            .schedule
            .stage(self.regs.j)
            .ok_or(Error::PastEnd(self.n as i32 - 1))?;
        let c = ss_cycle(&self.params, &self.regs, xd, yd, stage, self.backend)?;
        self.regs = c.regs;
        if let Some(z) = c.z {
            self.product.push(z);
        }
        Ok((c.z, c.row))
    }

    /// Pure transition: the next state, the emitted digit, and the trace row.
    pub fn step(&self, xd: SignedDigit, yd: SignedDigit) -> Result<(MulSsState, Option<SignedDigit>, TraceRow)> {
        let mut s = self.clone();
        let (z, row) = s.advance(xd, yd)?;
        Ok((s, z, row))
    }
}

/// Runs a whole multiplication: n + 3 cycles, n product digits.
pub fn mul_ss_run(x: &SdWord, y: &SdWord, mode: WidthMode) -> Result<(SdWord, Trace)> {
    mul_ss_run_with(x, y, mode, Backend::Behavioral)
}

pub fn mul_ss_run_with(x: &SdWord, y: &SdWord, mode: WidthMode, backend: Backend) -> Result<(SdWord, Trace)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len() as u32;
    let mut s = MulSsState::with_backend(n, mode, backend)?;
    let delta = s.params.delta as i32;
    let mut rows = Vec::with_capacity((n as i32 + delta) as usize);
    while !s.is_done() {
        let i = (s.j() + delta + 1) as usize;
        let (_, row) = s.advance(x.digit(i), y.digit(i))?;
        rows.push(row);
    }
    let product = s.product();
    let trace = Trace {
        kind: MultiplierKind::SerialSerial,
        n,
        mode,
        p: s.p(),
        rows,
        product: product.clone(),
    };
    Ok((product, trace))
}
