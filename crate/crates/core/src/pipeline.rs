//! The unrolled, digit-level pipelined array: per-stage widths with working
//! precision reduction, the digit-slice cells each stage is built from, the
//! stair-case input skew, and a clocked register-transfer simulation.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::olmul_sp::{sp_cycle, SpRegisters};
use crate::olmul_ss::{ss_cycle, SsRegisters};
use crate::residual::{full_adder, half_adder, CarrySave};
use crate::sdnum::{FixedPoint, SdWord, SignedDigit};
use crate::selection::{MultiplierKind, RadixParams};
use crate::trace::{Phase, WidthMode};

/// Largest precision the engines accept (all words stay within 120 bits).
pub const MAX_N: u32 = 100;

/// Working precision `p = ceil((2n + delta + t) / 3)`.
pub fn working_precision(n: u32, delta: u32, t: u32) -> u32 {
    (2 * n + delta + t).div_ceil(3)
}

/// Widths implemented by one stage (one cycle `j` of the recurrence).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageWidths {
    pub j: i32,
    pub phase: Phase,
    /// Fractional bits of v[j] (the number of residual slices to the right
    /// of the binary point).
    pub v_fb: u32,
    /// Fractional bits of the x operand window fed to its selector.
    pub x_fb: Option<u32>,
    /// Fractional bits of the y operand window (serial-parallel: of Y).
    pub y_fb: Option<u32>,
    /// Fractional bits of the incoming residual pair that are kept.
    pub residual_fb: u32,
    /// True when the stage discards bits that a full-width stage would keep.
    pub truncating: bool,
}

/// Digit-slice cell types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceKind {
    /// Least significant slice: the y term bit and the `c_x` unit are copied
    /// to the two output vectors. Red in the activity diagrams.
    Copy,
    /// Next slice: one full adder over the x term bit, the y term bit and the
    /// `c_y` unit; no first-level carry leaves it. Purple.
    SingleFa,
    /// Third slice: full adder over x term and residual pair, then a half
    /// adder with the y term bit. Yellow.
    FaHa,
    /// Repeated digit slice: two full-adder levels (a [4:2] compressor). Grey.
    Repeated,
    /// One of the three most significant slices of a selecting stage; they
    /// also feed the V, SELM and M blocks. Blue. After an M block the carry
    /// input is zero, so the first level acts as a half adder.
    Select,
    /// Register transfer in a last-delta stage (no adders).
    Wire,
    /// Most significant slices of a last-delta stage: V, SELM and M only.
    LastDelta,
    /// Serial-parallel slice: one full adder over the residual pair and the
    /// Y term bit ([3:2]).
    Compress,
    /// Serial-parallel counterpart of [`SliceKind::Select`].
    SelectSp,
}

impl SliceKind {
    pub fn name(self) -> &'static str {
        match self {
            SliceKind::Copy => "copy",
            SliceKind::SingleFa => "single-fa",
            SliceKind::FaHa => "fa-ha",
            SliceKind::Repeated => "repeated",
            SliceKind::Select => "select",
            SliceKind::Wire => "wire",
            SliceKind::LastDelta => "last-delta",
            SliceKind::Compress => "compress",
            SliceKind::SelectSp => "select-sp",
        }
    }

    /// Input and output bit counts.
    pub fn arity(self) -> (usize, usize) {
        match self {
            SliceKind::Copy | SliceKind::Wire | SliceKind::LastDelta => (2, 2),
            SliceKind::SingleFa => (3, 2),
            SliceKind::FaHa => (4, 3),
            SliceKind::Repeated | SliceKind::Select => (5, 3),
            SliceKind::Compress | SliceKind::SelectSp => (3, 2),
        }
    }
}

/// Evaluates one slice.
///
/// Inputs and outputs per kind:
/// * `Copy`: `[b, c_x]` to `[vs, vc]`
/// * `SingleFa`: `[a, b, c_y]` to `[vs, carry]`
/// * `FaHa`: `[a, ws, wc, b]` to `[vs, carry1, carry2]`
/// * `Repeated`, `Select`: `[a, ws, wc, b, carry1_in]` to `[vs, carry1, carry2]`
/// * `Compress`, `SelectSp`: `[ws, wc, b]` to `[vs, carry]`
/// * `Wire`, `LastDelta`: `[ws, wc]` to `[vs, vc]`
///
/// `carry1` is the first-level carry into the next more significant slice;
/// `carry`/`carry2` become that slice's `vc` bit.
pub fn slice_eval(kind: SliceKind, inputs: &[bool]) -> Result<Vec<bool>> {
    let (n_in, _) = kind.arity();
    if inputs.len() != n_in {
        return Err(Error::SliceArity {
            kind: kind.name(),
            expected: n_in,
            got: inputs.len(),
        });
    }
    let i = inputs;
    Ok(match kind {
        SliceKind::Copy | SliceKind::Wire | SliceKind::LastDelta => vec![i[0], i[1]],
        SliceKind::SingleFa | SliceKind::Compress | SliceKind::SelectSp => {
            let (s, c) = full_adder(i[0], i[1], i[2]);
            vec![s, c]
        }
        SliceKind::FaHa => {
            let (s1, c1) = full_adder(i[0], i[1], i[2]);
            let (s, c2) = half_adder(s1, i[3]);
            vec![s, c1, c2]
        }
        SliceKind::Repeated | SliceKind::Select => {
            let (s1, c1) = full_adder(i[0], i[1], i[2]);
            let (s, c2) = full_adder(s1, i[4], i[3]);
            vec![s, c1, c2]
        }
    })
}

impl StageWidths {
    /// Slice kind at each datapath position `-1 ..= v_fb`, most significant
    /// first.
    pub fn slice_kinds(&self, kind: MultiplierKind) -> Vec<(i32, SliceKind)> {
        let w = self.v_fb as i32;
        (-1..=w)
            .map(|pos| {
                let k = match (self.phase, kind) {
                    (Phase::Final, _) if pos <= 1 => SliceKind::LastDelta,
                    (Phase::Final, _) => SliceKind::Wire,
                    (_, MultiplierKind::SerialSerial) => {
                        if pos == w {
                            SliceKind::Copy
                        } else if pos == w - 1 {
                            SliceKind::SingleFa
                        } else if pos == w - 2 {
                            SliceKind::FaHa
                        } else if pos <= 1 && self.phase == Phase::Recurrence {
                            SliceKind::Select
                        } else {
                            SliceKind::Repeated
                        }
                    }
                    (_, MultiplierKind::SerialParallel) => {
                        if pos == w {
                            SliceKind::Copy
                        } else if pos <= 1 && self.phase == Phase::Recurrence {
                            SliceKind::SelectSp
                        } else {
                            SliceKind::Compress
                        }
                    }
                };
                (pos, k)
            })
            .collect()
    }
}

/// Per-stage widths of a whole multiplication.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceSchedule {
    pub kind: MultiplierKind,
    pub n: u32,
    pub delta: u32,
    pub t: u32,
    pub mode: WidthMode,
    /// Working precision from the closed form.
    pub p: u32,
    /// Ignored slices, `n + delta - p`.
    pub h: u32,
    pub stages: Vec<StageWidths>,
}

impl SliceSchedule {
    pub fn stage(&self, j: i32) -> Option<&StageWidths> {
        let idx = j + self.delta as i32;
        if idx < 0 {
            return None;
        }
        self.stages.get(idx as usize)
    }

    pub fn v_widths(&self) -> Vec<u32> {
        self.stages.iter().map(|s| s.v_fb).collect()
    }

    pub fn params(&self) -> RadixParams {
        RadixParams {
            delta: self.delta,
            t: self.t,
            ..RadixParams::for_kind(self.kind)
        }
    }
}

pub fn check_precision(n: u32, delta: u32) -> Result<()> {
    if n < delta + 1 {
        return Err(Error::InvalidPrecision {
            n,
            why: "needs at least delta + 1 digits",
        });
    }
    if n > MAX_N {
        return Err(Error::InvalidPrecision {
            n,
            why: "exceeds the supported 100 digits",
        });
    }
    Ok(())
}

/// Builds the per-stage width profile.
///
/// Serial-serial: a full-width stage `j` needs `j + 2 delta + 1` fractional
/// bits for v[j]. In reduced mode stages grow one slice per cycle up to the
/// cap `p + delta`, which is reached by stage `p - delta`; later input stages
/// drop three low slices each but never fall below `n + 2 delta - j`, the
/// width the last input stage needs so that the last delta stages (which
/// lose one slice each) still end with `n + delta` bits. Serial-parallel
/// stages keep the full `n + 2` bits while inputs arrive.
pub fn slice_schedule(params: &RadixParams, n: u32, mode: WidthMode) -> Result<SliceSchedule> {
    params.validate()?;
    let delta = params.delta;
    check_precision(n, delta)?;
    let d = delta as i32;
    let ni = n as i32;
    let p = working_precision(n, delta, params.t);
    let cap = (p + delta) as i32;
    let mut stages: Vec<StageWidths> = Vec::with_capacity((n + delta) as usize);
    for j in -d..ni {
        let phase = if j < 0 {
            Phase::Init
        } else if j <= ni - d - 1 {
            Phase::Recurrence
        } else {
            Phase::Final
        };
        let prev = stages.last().map(|s| s.v_fb as i32);
        let st = match (params.kind, phase) {
            (_, Phase::Final) => {
                let w = prev.expect("final stages follow input stages") - 1;
                StageWidths {
                    j,
                    phase,
                    v_fb: w as u32,
                    x_fb: None,
                    y_fb: None,
                    residual_fb: w as u32,
                    truncating: false,
                }
            }
            (MultiplierKind::SerialSerial, _) => {
                let natural = j + 2 * d + 1;
                let w = match mode {
                    WidthMode::Full => natural,
                    WidthMode::Reduced if j <= p as i32 - d => natural.min(cap),
                    WidthMode::Reduced => {
                        let prev = prev.expect("a growing stage precedes truncation");
                        (prev - 3).max(ni + 2 * d - j).min(natural)
                    }
                };
                StageWidths {
                    j,
                    phase,
                    v_fb: w as u32,
                    x_fb: Some((w - d - 1) as u32),
                    y_fb: Some((w - d) as u32),
                    residual_fb: (w - 2) as u32,
                    truncating: w < natural,
                }
            }
            (MultiplierKind::SerialParallel, _) => StageWidths {
                j,
                phase,
                v_fb: n + delta,
                x_fb: None,
                y_fb: Some(n),
                residual_fb: n + delta - 1,
                truncating: false,
            },
        };
        stages.push(st);
    }
    Ok(SliceSchedule {
        kind: params.kind,
        n,
        delta,
        t: params.t,
        mode,
        p,
        h: n + delta - p,
        stages,
    })
}

fn bits_at(w: &FixedPoint, pos: i32) -> bool {
    if pos > w.fb() as i32 {
        false
    } else {
        w.bit(pos)
    }
}

/// Gate-level evaluation of one serial-serial adder row: each position is
/// computed by its slice cell and carries ripple between neighbouring cells.
/// `a`/`b` are the selector outputs, `c_y`/`c_x` their negation units,
/// `w` the incoming residual pair, all in the stage's `(2, v_fb)` frame.
pub fn ss_row_structural(
    stage: &StageWidths,
    a: &FixedPoint,
    b: &FixedPoint,
    c_y: bool,
    c_x: bool,
    w: &CarrySave,
) -> Result<CarrySave> {
    let fb = stage.v_fb;
    let kinds = stage.slice_kinds(MultiplierKind::SerialSerial);
    let mut vs: i128 = 0;
    let mut vc: i128 = 0;
    let mut carry1 = false;
    let idx = |pos: i32| (fb as i32 - pos) as u32;
    let set = |acc: &mut i128, pos: i32, bit: bool| {
        if bit && pos >= -1 {
            *acc |= 1i128 << idx(pos);
        }
    };
    for &(pos, kind) in kinds.iter().rev() {
        let (ai, wsi, wci, bi) = (
            bits_at(a, pos),
            bits_at(&w.sum, pos),
            bits_at(&w.carry, pos),
            bits_at(b, pos),
        );
        match kind {
            SliceKind::Copy => {
                let o = slice_eval(kind, &[bi, c_x])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos, o[1]);
                carry1 = c_y;
            }
            SliceKind::SingleFa => {
                let o = slice_eval(kind, &[ai, bi, carry1])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos - 1, o[1]);
                carry1 = false;
            }
            SliceKind::FaHa => {
                let o = slice_eval(kind, &[ai, wsi, wci, bi])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos - 1, o[2]);
                carry1 = o[1];
            }
            SliceKind::Repeated | SliceKind::Select => {
                let o = slice_eval(kind, &[ai, wsi, wci, bi, carry1])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos - 1, o[2]);
                carry1 = o[1];
            }
            SliceKind::Wire | SliceKind::LastDelta => {
                let o = slice_eval(kind, &[wsi, wci])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos, o[1]);
            }
            SliceKind::Compress | SliceKind::SelectSp => {
                return Err(Error::Unsupported(format!(
                    "slice {} in a serial-serial row",
                    kind.name()
                )))
            }
        }
    }
    CarrySave::new(
        FixedPoint::from_raw(vs, 2, fb)?,
        FixedPoint::from_raw(vc, 2, fb)?,
    )
}

/// Gate-level evaluation of one serial-parallel adder row.
pub fn sp_row_structural(
    stage: &StageWidths,
    b: &FixedPoint,
    c_x: bool,
    w: &CarrySave,
) -> Result<CarrySave> {
    let fb = stage.v_fb;
    let mut vs: i128 = 0;
    let mut vc: i128 = 0;
    let idx = |pos: i32| (fb as i32 - pos) as u32;
    let set = |acc: &mut i128, pos: i32, bit: bool| {
        if bit && pos >= -1 {
            *acc |= 1i128 << idx(pos);
        }
    };
    for (pos, kind) in stage.slice_kinds(MultiplierKind::SerialParallel) {
        let (wsi, wci, bi) = (bits_at(&w.sum, pos), bits_at(&w.carry, pos), bits_at(b, pos));
        match kind {
            SliceKind::Copy => {
                let o = slice_eval(kind, &[bi, c_x])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos, o[1]);
            }
            SliceKind::Compress | SliceKind::SelectSp => {
                let o = slice_eval(kind, &[wsi, wci, bi])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos - 1, o[1]);
            }
            SliceKind::Wire | SliceKind::LastDelta => {
                let o = slice_eval(kind, &[wsi, wci])?;
                set(&mut vs, pos, o[0]);
                set(&mut vc, pos, o[1]);
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "slice {} in a serial-parallel row",
                    other.name()
                )))
            }
        }
    }
    CarrySave::new(
        FixedPoint::from_raw(vs, 2, fb)?,
        FixedPoint::from_raw(vc, 2, fb)?,
    )
}

/// How an engine computes its adder rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Whole-word carry-save arithmetic.
    Behavioral,
    /// Slice-by-slice composition of [`slice_eval`] cells.
    Structural,
}

/// K operand vectors entering the array one per clock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VectorStream {
    SerialSerial { n: u32, pairs: Vec<(SdWord, SdWord)> },
    SerialParallel { n: u32, xs: Vec<SdWord>, y: FixedPoint },
}

impl VectorStream {
    pub fn serial_serial(pairs: Vec<(SdWord, SdWord)>) -> Result<Self> {
        let n = pairs.first().ok_or(Error::EmptyStream)?.0.len();
        for (x, y) in &pairs {
            for w in [x, y] {
                if w.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: w.len(),
                    });
                }
            }
        }
        Ok(VectorStream::SerialSerial {
            n: n as u32,
            pairs,
        })
    }

    pub fn serial_parallel(xs: Vec<SdWord>, y: FixedPoint) -> Result<Self> {
        let n = xs.first().ok_or(Error::EmptyStream)?.len();
        if let Some(bad) = xs.iter().find(|x| x.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(VectorStream::SerialParallel {
            n: n as u32,
            xs,
            y,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            VectorStream::SerialSerial { pairs, .. } => pairs.len(),
            VectorStream::SerialParallel { xs, .. } => xs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self) -> u32 {
        match self {
            VectorStream::SerialSerial { n, .. } | VectorStream::SerialParallel { n, .. } => *n,
        }
    }

    pub fn kind(&self) -> MultiplierKind {
        match self {
            VectorStream::SerialSerial { .. } => MultiplierKind::SerialSerial,
            VectorStream::SerialParallel { .. } => MultiplierKind::SerialParallel,
        }
    }

    /// Digit index `i` (0-based) of vector `k`: `(x_i, y_i)`; the y digit is
    /// zero for serial-parallel streams.
    fn digits(&self, k: usize, i: usize) -> (SignedDigit, SignedDigit) {
        match self {
            VectorStream::SerialSerial { pairs, .. } => {
                let (x, y) = &pairs[k];
                (x.digit(i + 1), y.digit(i + 1))
            }
            VectorStream::SerialParallel { xs, .. } => (xs[k].digit(i + 1), SignedDigit::ZERO),
        }
    }
}

/// One digit presented by the stair-case shifter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FeedDigit {
    pub vector: usize,
    pub x: SignedDigit,
    pub y: SignedDigit,
}

/// Stair-case skew: `feed[c][i]` is what input stage `i` sees at clock `c`,
/// namely digit `i` of vector `c - i`.
pub fn staircase_shift(vs: &VectorStream) -> Vec<Vec<Option<FeedDigit>>> {
    let k = vs.len();
    let n = vs.n() as usize;
    if k == 0 {
        return Vec::new();
    }
    let clocks = k + n - 1;
    (0..clocks)
        .map(|c| {
            (0..n)
                .map(|i| {
                    let v = c.checked_sub(i)?;
                    (v < k).then(|| {
                        let (x, y) = vs.digits(v, i);
                        FeedDigit { vector: v, x, y }
                    })
                })
                .collect()
        })
        .collect()
}

/// Inverse skew: collects digits emitted as `(clock, digit_index, digit)`
/// back into aligned words, where digit `i` of vector `k` leaves at clock
/// `k + i + offset`.
pub fn deskew(
    emitted: &[(usize, usize, SignedDigit)],
    k: usize,
    n: usize,
    offset: usize,
) -> Result<Vec<SdWord>> {
    let mut words = vec![vec![None; n]; k];
    for &(clock, i, d) in emitted {
        let v = clock
            .checked_sub(i + offset)
            .filter(|&v| v < k && i < n)
            .ok_or_else(|| Error::MalformedTrace(format!("digit {i} at clock {clock}")))?;
        words[v][i] = Some(d);
    }
    words
        .into_iter()
        .map(|w| {
            w.into_iter()
                .collect::<Option<Vec<_>>>()
                .map(SdWord::new)
                .ok_or_else(|| Error::MalformedTrace("missing product digit".into()))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StageRegs {
    Ss(SsRegisters),
    Sp(SpRegisters),
}

/// The pipeline registers behind every stage, tagged with the vector they
/// hold.
#[derive(Clone, Debug)]
pub struct PipelineArray {
    schedule: Arc<SliceSchedule>,
    y: Option<FixedPoint>,
    regs: Vec<Option<(usize, StageRegs, Vec<SignedDigit>)>>,
    latch: Option<(usize, SdWord)>,
}

/// Outcome of streaming K vectors through the array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StreamResult {
    pub products: Vec<SdWord>,
    /// Clocks until the last product sits in the output latch.
    pub cycles: u64,
    /// Implemented residual slices of all occupied stages, per clock.
    pub activity: Vec<u64>,
}

impl PipelineArray {
    pub fn new(schedule: SliceSchedule, y: Option<FixedPoint>) -> Result<Self> {
        if schedule.kind == MultiplierKind::SerialParallel && y.is_none() {
            return Err(Error::InvalidParams("serial-parallel array needs Y".into()));
        }
        let stages = schedule.stages.len();
        Ok(PipelineArray {
            schedule: Arc::new(schedule),
            y,
            regs: vec![None; stages],
            latch: None,
        })
    }

    pub fn schedule(&self) -> &SliceSchedule {
        &self.schedule
    }

    /// Which vector each stage register currently holds.
    pub fn occupancy(&self) -> Vec<Option<usize>> {
        self.regs.iter().map(|r| r.as_ref().map(|(k, _, _)| *k)).collect()
    }

    /// One clock. `entering` is the vector admitted into stage 0, `feed`
    /// supplies the operand digits for the input stages. Every stage reads
    /// the pre-clock registers, so stages are independent within a tick.
    /// Returns the digits emitted this clock and the active slice count.
    fn tick(
        &mut self,
        entering: Option<usize>,
        feed: &[Option<FeedDigit>],
    ) -> Result<(Vec<(usize, SignedDigit)>, u64)> {
        let sched = Arc::clone(&self.schedule);
        let params = sched.params();
        let delta = sched.delta as usize;
        let n = sched.n as usize;
        let mut next = vec![None; self.regs.len()];
        let mut emitted = Vec::new();
        let mut active = 0u64;
        for (s, stage) in sched.stages.iter().enumerate() {
            let input = if s == 0 {
                entering.map(|k| {
                    let r = match sched.kind {
                        MultiplierKind::SerialSerial => StageRegs::Ss(SsRegisters::new(-(delta as i32))),
                        MultiplierKind::SerialParallel => StageRegs::Sp(SpRegisters::new(-(delta as i32))),
                    };
                    (k, r, Vec::with_capacity(n))
                })
            } else {
                self.regs[s - 1].clone()
            };
            let Some((k, regs, mut digits)) = input else {
                continue;
            };
            let (xd, yd) = if s < n {
                let f = feed
                    .get(s)
                    .copied()
                    .flatten()
                    .filter(|f| f.vector == k)
                    .ok_or_else(|| Error::MalformedTrace(format!("stage {s} has no feed for vector {k}")))?;
                (f.x, f.y)
            } else {
                (SignedDigit::ZERO, SignedDigit::ZERO)
            };
            active += stage.v_fb as u64;
            let (out, z) = match regs {
                StageRegs::Ss(r) => {
                    let c = ss_cycle(&params, &r, xd, yd, stage, Backend::Structural)?;
                    (StageRegs::Ss(c.regs), c.z)
                }
                StageRegs::Sp(r) => {
                    let y = self.y.as_ref().expect("checked in new");
                    let c = sp_cycle(&params, &r, y, xd, stage, Backend::Structural)?;
                    (StageRegs::Sp(c.regs), c.z)
                }
            };
            if let Some(z) = z {
                emitted.push((s - delta, z));
                digits.push(z);
            }
            next[s] = Some((k, out, digits));
        }
        // the output latch takes whatever left the last stage last clock
        self.latch = self.regs.last().cloned().flatten().map(|(k, _, d)| (k, SdWord::new(d)));
        self.regs = next;
        Ok((emitted, active))
    }
}

/// Streams every vector through a freshly built array until the last
/// product is latched, counting clocks.
pub fn pipe_run_stream(vs: &VectorStream, mode: WidthMode) -> Result<StreamResult> {
    if vs.is_empty() {
        return Err(Error::EmptyStream);
    }
    let kind = vs.kind();
    let params = RadixParams::for_kind(kind);
    let n = vs.n();
    let mode = match kind {
        MultiplierKind::SerialSerial => mode,
        MultiplierKind::SerialParallel => WidthMode::Full,
    };
    let schedule = slice_schedule(&params, n, mode)?;
    let y = match vs {
        VectorStream::SerialParallel { y, .. } => Some(*y),
        VectorStream::SerialSerial { .. } => None,
    };
    let mut array = PipelineArray::new(schedule, y)?;
    let feed = staircase_shift(vs);
    let k = vs.len();
    let offset = params.delta as usize;
    let mut emitted = Vec::new();
    let mut activity = Vec::new();
    let mut latched: Vec<Option<SdWord>> = vec![None; k];
    let mut clock = 0usize;
    while latched.iter().any(Option::is_none) {
        let entering = (clock < k).then_some(clock);
        let empty = Vec::new();
        let row = feed.get(clock).unwrap_or(&empty);
        let (digits, active) = array.tick(entering, row)?;
        emitted.extend(digits.into_iter().map(|(i, z)| (clock, i, z)));
        activity.push(active);
        if let Some((v, word)) = array.latch.take() {
            latched[v] = Some(word);
        }
        clock += 1;
        if clock > k + (n as usize) * 4 + 16 {
            return Err(Error::MalformedTrace("pipeline did not drain".into()));
        }
    }
    let products = deskew(&emitted, k, n as usize, offset)?;
    for (p, l) in products.iter().zip(&latched) {
        if Some(p) != l.as_ref() {
            return Err(Error::MalformedTrace("latched word differs from deskewed digits".into()));
        }
    }
    Ok(StreamResult {
        products,
        cycles: clock as u64,
        activity,
    })
}
