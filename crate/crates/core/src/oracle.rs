//! Exact reference arithmetic and the verification harness: per-cycle
//! online bound checks, exhaustive sweeps and seeded random sweeps.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ExactFraction;
use crate::olmul_sp::mul_sp_run;
use crate::olmul_ss::mul_ss_run;
use crate::pipeline::{pipe_run_stream, VectorStream};
use crate::sdnum::{FixedPoint, SdWord, SignedDigit};
use crate::selection::{MultiplierKind, RadixParams};
use crate::trace::{Trace, WidthMode};

/// Largest precision accepted by [`exhaustive_verify`].
pub const MAX_EXHAUSTIVE_N: u32 = 10;

/// Exact dyadic product.
pub fn exact_product(x: &ExactFraction, y: &ExactFraction) -> ExactFraction {
    x * y
}

/// The second operand of a multiplication.
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    /// Serial-serial: a digit stream.
    Digits(&'a SdWord),
    /// Serial-parallel: the constant word.
    Constant(&'a FixedPoint),
}

/// A small exact dyadic `num / 2^scale` for the hot loops; converted to
/// [`ExactFraction`] only for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Dyadic {
    num: i128,
    scale: u32,
}

impl Dyadic {
    const ZERO: Dyadic = Dyadic { num: 0, scale: 0 };

    fn abs(self) -> Dyadic {
        Dyadic {
            num: self.num.abs(),
            ..self
        }
    }

    fn cmp_value(&self, other: &Dyadic) -> Ordering {
        let s = self.scale.max(other.scale);
        (self.num << (s - self.scale)).cmp(&(other.num << (s - other.scale)))
    }

    fn exact(&self) -> ExactFraction {
        ExactFraction::new(self.num, self.scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// `|x[j] y[j] - z[j]| >= 2^-j` on some cycle.
    OnlineBound,
    /// `|z - x y| >= 2^-n` for the finished product.
    FinalBound,
    /// `v - vhat` outside `[0, 2^(1-t))`.
    EstimateGap,
    /// The converted product register disagrees with the emitted digits.
    Conversion,
    /// The pipelined array produced different digits.
    PipelineMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub inputs: String,
    pub cycle: Option<i32>,
    pub observed: ExactFraction,
    pub bound: ExactFraction,
}

/// Number of failures kept verbatim in a report; the count is always exact.
pub const KEPT_FAILURES: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub kind: Option<MultiplierKind>,
    pub mode: Option<WidthMode>,
    pub n: u32,
    pub cases_run: u64,
    pub failure_count: u64,
    pub failures: Vec<Failure>,
    /// Largest final `|z - x y|`.
    pub max_abs_error: ExactFraction,
    /// Largest `|x[j] y[j] - z[j]| 2^j` over all emitting cycles (below 1
    /// when every online bound held).
    pub max_bound_ratio: ExactFraction,
    /// Largest `|w[j]|` over all cycles.
    pub max_residual: ExactFraction,
    /// Cycles whose residual magnitude exceeded 3/4.
    pub residual_excursions: u64,
    pub min_estimate_gap: Option<ExactFraction>,
    pub max_estimate_gap: Option<ExactFraction>,
    /// Cases whose pipelined digits were compared with the engine's.
    pub pipeline_checked: u64,
}

impl VerifyReport {
    pub fn empty(kind: Option<MultiplierKind>, mode: Option<WidthMode>, n: u32) -> Self {
        VerifyReport {
            kind,
            mode,
            n,
            cases_run: 0,
            failure_count: 0,
            failures: Vec::new(),
            max_abs_error: ExactFraction::zero(),
            max_bound_ratio: ExactFraction::zero(),
            max_residual: ExactFraction::zero(),
            residual_excursions: 0,
            min_estimate_gap: None,
            max_estimate_gap: None,
            pipeline_checked: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn fail(&mut self, f: Failure) {
        self.failure_count += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(f);
        }
    }

    /// Associative combination of two reports over disjoint cases.
    pub fn merge(mut self, other: VerifyReport) -> VerifyReport {
        self.cases_run += other.cases_run;
        self.failure_count += other.failure_count;
        for f in other.failures {
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(f);
            }
        }
        self.max_abs_error = self.max_abs_error.max(other.max_abs_error);
        self.max_bound_ratio = self.max_bound_ratio.max(other.max_bound_ratio);
        self.max_residual = self.max_residual.max(other.max_residual);
        self.residual_excursions += other.residual_excursions;
        self.min_estimate_gap = match (self.min_estimate_gap, other.min_estimate_gap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max_estimate_gap = match (self.max_estimate_gap, other.max_estimate_gap) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.pipeline_checked += other.pipeline_checked;
        self
    }
}

/// Running extrema kept as [`Dyadic`] while a trace is scanned.
struct Scan {
    max_err: Dyadic,
    max_ratio: Dyadic,
    max_w: Dyadic,
    min_gap: Option<Dyadic>,
    max_gap: Option<Dyadic>,
    excursions: u64,
}

fn prefix_ints(w: &SdWord, n: usize) -> Vec<i128> {
    // prefix[k] = (value of the first k digits) * 2^n
    let mut out = Vec::with_capacity(n + 1);
    let mut acc: i128 = 0;
    out.push(0);
    for k in 1..=n {
        acc += (w.digit(k).value() as i128) << (n - k);
        out.push(acc);
    }
    out
}

fn describe(x: &SdWord, y: Operand<'_>) -> String {
    match y {
        Operand::Digits(y) => format!("x={x} y={y}"),
        Operand::Constant(y) => format!("x={x} Y={y}"),
    }
}

/// Checks every emitting row of a trace against the online error bound,
/// the finished product against `2^-n`, every estimate gap, and the product
/// conversion register. Residual magnitudes are recorded as statistics.
pub fn check_online_bound(trace: &Trace, x: &SdWord, y: Operand<'_>) -> Result<VerifyReport> {
    let n = trace.n as usize;
    let params = RadixParams::for_kind(trace.kind);
    let delta = params.delta as usize;
    if x.len() != n {
        return Err(Error::MalformedTrace(format!("x has {} digits, trace n = {n}", x.len())));
    }
    if trace.rows.len() != n + delta {
        return Err(Error::MalformedTrace(format!(
            "{} rows, expected {}",
            trace.rows.len(),
            n + delta
        )));
    }
    if trace.product.len() != n {
        return Err(Error::MalformedTrace(format!("product has {} digits", trace.product.len())));
    }
    if 2 * n + 4 > 120 {
        return check_online_bound_wide(trace, x, y);
    }
    let xs = prefix_ints(x, n);
    let (ys, y_const) = match y {
        Operand::Digits(w) => {
            if w.len() != n || trace.kind != MultiplierKind::SerialSerial {
                return Err(Error::MalformedTrace("operand does not match the trace".into()));
            }
            (prefix_ints(w, n), None)
        }
        Operand::Constant(c) => {
            if trace.kind != MultiplierKind::SerialParallel {
                return Err(Error::MalformedTrace("operand does not match the trace".into()));
            }
            (Vec::new(), Some(c.with_fb(n as u32).raw()))
        }
    };
    let zs = prefix_ints(&trace.product, n);
    let mut report = VerifyReport::empty(Some(trace.kind), Some(trace.mode), trace.n);
    report.cases_run = 1;
    let mut scan = Scan {
        max_err: Dyadic::ZERO,
        max_ratio: Dyadic::ZERO,
        max_w: Dyadic::ZERO,
        min_gap: None,
        max_gap: None,
        excursions: 0,
    };
    let scale2 = 2 * n as u32;
    let mut emitted = 0usize;
    for row in &trace.rows {
        // residual statistics
        let wn = row.w_next.resolve();
        let w = Dyadic {
            num: wn.raw(),
            scale: wn.fb() + 1,
        }
        .abs();
        if w.cmp_value(&scan.max_w) == Ordering::Greater {
            scan.max_w = w;
        }
        if w.cmp_value(&Dyadic { num: 3, scale: 2 }) == Ordering::Greater {
            scan.excursions += 1;
        }
        let Some(z) = row.z else { continue };
        let _ = z;
        emitted += 1;
        let m = emitted;
        let k = (m + delta).min(n);
        let yv = match y_const {
            Some(c) => c,
            None => ys[k],
        };
        let lhs = xs[k] * yv - (zs[m] << n);
        let ratio = Dyadic {
            num: lhs.abs(),
            scale: scale2 - m as u32,
        };
        if ratio.cmp_value(&scan.max_ratio) == Ordering::Greater {
            scan.max_ratio = ratio;
        }
        if ratio.cmp_value(&Dyadic { num: 1, scale: 0 }) != Ordering::Less {
            report.fail(Failure {
                kind: FailureKind::OnlineBound,
                inputs: describe(x, y),
                cycle: Some(row.j),
                observed: Dyadic { num: lhs.abs(), scale: scale2 }.exact(),
                bound: ExactFraction::pow2(-(m as i64)),
            });
        }
        if let Some(zp) = row.z_partial {
            if zp.with_fb(n as u32).raw() != zs[m] {
                report.fail(Failure {
                    kind: FailureKind::Conversion,
                    inputs: describe(x, y),
                    cycle: Some(row.j),
                    observed: zp.value(),
                    bound: Dyadic { num: zs[m], scale: n as u32 }.exact(),
                });
            }
        }
        if let Some(e) = row.vhat {
            let v = row.v.resolve();
            let shift = v.fb() - e.bits().fb();
            let gap = FixedPoint::from_raw_unchecked(v.raw() - (e.bits().raw() << shift), 2, v.fb());
            let g = Dyadic {
                num: gap.raw(),
                scale: v.fb(),
            };
            let sup = Dyadic {
                num: 1,
                scale: params.t - 1,
            };
            if g.num < 0 || g.cmp_value(&sup) != Ordering::Less {
                report.fail(Failure {
                    kind: FailureKind::EstimateGap,
                    inputs: describe(x, y),
                    cycle: Some(row.j),
                    observed: g.exact(),
                    bound: sup.exact(),
                });
            }
            scan.min_gap = Some(match scan.min_gap {
                Some(a) if a.cmp_value(&g) != Ordering::Greater => a,
                _ => g,
            });
            scan.max_gap = Some(match scan.max_gap {
                Some(a) if a.cmp_value(&g) != Ordering::Less => a,
                _ => g,
            });
        }
    }
    if emitted != n {
        return Err(Error::MalformedTrace(format!("{emitted} digits emitted, expected {n}")));
    }
    let yv = y_const.unwrap_or_else(|| ys[n]);
    let err = Dyadic {
        num: (xs[n] * yv - (zs[n] << n)).abs(),
        scale: scale2,
    };
    scan.max_err = err;
    if err.cmp_value(&Dyadic { num: 1, scale: n as u32 }) != Ordering::Less {
        report.fail(Failure {
            kind: FailureKind::FinalBound,
            inputs: describe(x, y),
            cycle: None,
            observed: err.exact(),
            bound: ExactFraction::pow2(-(n as i64)),
        });
    }
    report.max_abs_error = scan.max_err.exact();
    report.max_bound_ratio = scan.max_ratio.exact();
    report.max_residual = scan.max_w.exact();
    report.residual_excursions = scan.excursions;
    report.min_estimate_gap = scan.min_gap.map(|g| g.exact());
    report.max_estimate_gap = scan.max_gap.map(|g| g.exact());
    Ok(report)
}

/// Same checks in arbitrary precision, for products too wide for i128.
fn check_online_bound_wide(trace: &Trace, x: &SdWord, y: Operand<'_>) -> Result<VerifyReport> {
    let n = trace.n as usize;
    let params = RadixParams::for_kind(trace.kind);
    let delta = params.delta as usize;
    let mut report = VerifyReport::empty(Some(trace.kind), Some(trace.mode), trace.n);
    report.cases_run = 1;
    let yv = |k: usize| match y {
        Operand::Digits(w) => w.prefix_value(k),
        Operand::Constant(c) => c.value(),
    };
    let three_q: ExactFraction = ExactFraction::new(3, 2);
    let e_sup = ExactFraction::pow2(1 - params.t as i64);
    let mut m = 0usize;
    for row in &trace.rows {
        let w = row.w_value().abs();
        if w > three_q {
            report.residual_excursions += 1;
        }
        report.max_residual = report.max_residual.clone().max(w);
        if row.z.is_none() {
            continue;
        }
        m += 1;
        let k = (m + delta).min(n);
        let z = trace.product.prefix_value(m);
        let gap = (x.prefix_value(k) * yv(k) - z.clone()).abs();
        let ratio = gap.shl(m as i64);
        if ratio >= ExactFraction::one() {
            report.fail(Failure {
                kind: FailureKind::OnlineBound,
                inputs: describe(x, y),
                cycle: Some(row.j),
                observed: gap,
                bound: ExactFraction::pow2(-(m as i64)),
            });
        }
        report.max_bound_ratio = report.max_bound_ratio.clone().max(ratio);
        if let Some(zp) = row.z_partial {
            if zp.value() != z {
                report.fail(Failure {
                    kind: FailureKind::Conversion,
                    inputs: describe(x, y),
                    cycle: Some(row.j),
                    observed: zp.value(),
                    bound: z,
                });
            }
        }
        if let Some(e) = row.vhat {
            let g = row.v_value() - e.value();
            // both live modulo 4
            let g = if g >= ExactFraction::from_int(2) {
                g - ExactFraction::from_int(4)
            } else if g < ExactFraction::from_int(-2) {
                g + ExactFraction::from_int(4)
            } else {
                g
            };
            if g.is_negative() || g >= e_sup {
                report.fail(Failure {
                    kind: FailureKind::EstimateGap,
                    inputs: describe(x, y),
                    cycle: Some(row.j),
                    observed: g.clone(),
                    bound: e_sup.clone(),
                });
            }
            report.min_estimate_gap = Some(match report.min_estimate_gap.take() {
                Some(a) => a.min(g.clone()),
                None => g.clone(),
            });
            report.max_estimate_gap = Some(match report.max_estimate_gap.take() {
                Some(a) => a.max(g),
                None => g,
            });
        }
    }
    if m != n {
        return Err(Error::MalformedTrace(format!("{m} digits emitted, expected {n}")));
    }
    let err = (x.value() * yv(n) - trace.product.value()).abs();
    if err >= ExactFraction::pow2(-(n as i64)) {
        report.fail(Failure {
            kind: FailureKind::FinalBound,
            inputs: describe(x, y),
            cycle: None,
            observed: err.clone(),
            bound: ExactFraction::pow2(-(n as i64)),
        });
    }
    report.max_abs_error = err;
    Ok(report)
}

/// Every value with n fractional bits that an n-digit word can hold,
/// `k 2^-n` for `|k| <= 2^n - 1`, recoded magnitude-sign.
pub fn all_operands(n: u32) -> Result<Vec<SdWord>> {
    let lim = (1i64 << n) - 1;
    (-lim..=lim)
        .map(|k| SdWord::from_fixed(&ExactFraction::new(k, n), n as usize))
        .collect()
}

/// Every `(1, n)` two's-complement constant, -1 included.
pub fn all_constants(n: u32) -> Result<Vec<FixedPoint>> {
    let half = 1i128 << n;
    (-half..half).map(|r| FixedPoint::from_raw(r, 1, n)).collect()
}

fn pipeline_check(
    report: &mut VerifyReport,
    stream: VectorStream,
    expected: &[SdWord],
    labels: impl Fn(usize) -> String,
) -> Result<()> {
    let res = pipe_run_stream(&stream, report.mode.unwrap_or(WidthMode::Full))?;
    for (i, (got, want)) in res.products.iter().zip(expected).enumerate() {
        report.pipeline_checked += 1;
        if got != want {
            report.fail(Failure {
                kind: FailureKind::PipelineMismatch,
                inputs: labels(i),
                cycle: None,
                observed: got.value(),
                bound: want.value(),
            });
        }
    }
    Ok(())
}

/// Runs serial-serial cases for one x against many y, checking each trace
/// and, when `pipeline` is set, streaming the same pairs through the array.
fn ss_batch(x: &SdWord, ys: &[SdWord], mode: WidthMode, pipeline: bool) -> Result<VerifyReport> {
    let n = x.len() as u32;
    let mut report = VerifyReport::empty(Some(MultiplierKind::SerialSerial), Some(mode), n);
    let mut products = Vec::with_capacity(ys.len());
    for y in ys {
        let (z, trace) = mul_ss_run(x, y, mode)?;
        report = report.merge(check_online_bound(&trace, x, Operand::Digits(y))?);
        products.push(z);
    }
    if pipeline {
        let pairs = ys.iter().map(|y| (x.clone(), y.clone())).collect();
        pipeline_check(&mut report, VectorStream::serial_serial(pairs)?, &products, |i| {
            describe(x, Operand::Digits(&ys[i]))
        })?;
    }
    Ok(report)
}

fn sp_batch(xs: &[SdWord], y: &FixedPoint, pipeline: bool) -> Result<VerifyReport> {
    let n = xs[0].len() as u32;
    let mut report = VerifyReport::empty(Some(MultiplierKind::SerialParallel), Some(WidthMode::Full), n);
    let mut products = Vec::with_capacity(xs.len());
    for x in xs {
        let (z, trace) = mul_sp_run(x, y)?;
        report = report.merge(check_online_bound(&trace, x, Operand::Constant(y))?);
        products.push(z);
    }
    if pipeline {
        pipeline_check(&mut report, VectorStream::serial_parallel(xs.to_vec(), *y)?, &products, |i| {
            describe(&xs[i], Operand::Constant(y))
        })?;
    }
    Ok(report)
}

fn reduce(parts: Vec<Result<VerifyReport>>, init: VerifyReport) -> Result<VerifyReport> {
    parts.into_iter().try_fold(init, |acc, r| Ok(acc.merge(r?)))
}

/// Sweeps every operand pair of precision `n`. Serial-serial sweeps also
/// stream every pair through the pipelined array and compare digits.
/// Serial-parallel sweeps use every constant Y and always full width.
pub fn exhaustive_verify(n: u32, kind: MultiplierKind, mode: WidthMode) -> Result<VerifyReport> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::InvalidPrecision {
            n,
            why: "exhaustive sweeps are limited to n <= 10",
        });
    }
    let xs = all_operands(n)?;
    match kind {
        MultiplierKind::SerialSerial => {
            let parts: Vec<_> = xs.par_iter().map(|x| ss_batch(x, &xs, mode, true)).collect();
            reduce(parts, VerifyReport::empty(Some(kind), Some(mode), n))
        }
        MultiplierKind::SerialParallel => {
            let ys = all_constants(n)?;
            let parts: Vec<_> = ys.par_iter().map(|y| sp_batch(&xs, y, true)).collect();
            reduce(parts, VerifyReport::empty(Some(kind), Some(WidthMode::Full), n))
        }
    }
}

fn random_word(rng: &mut ChaCha8Rng, n: u32) -> SdWord {
    SdWord::new((0..n).map(|_| SignedDigit::ALL[rng.gen_range(0..3)]).collect())
}

/// Batch size for streaming random cases through the pipelined array.
const STREAM_BATCH: usize = 256;

/// `count` random cases with every digit drawn uniformly from {-1, 0, 1}
/// (serial-parallel constants uniformly from all `(1, n)` words).
/// Deterministic for a given seed. Serial-serial cases are also streamed
/// through the pipelined array.
pub fn random_verify(
    n: u32,
    count: u64,
    seed: u64,
    kind: MultiplierKind,
    mode: WidthMode,
) -> Result<VerifyReport> {
    crate::pipeline::check_precision(n, kind.delta())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = match kind {
        MultiplierKind::SerialSerial => mode,
        MultiplierKind::SerialParallel => WidthMode::Full,
    };
    let init = VerifyReport::empty(Some(kind), Some(mode), n);
    match kind {
        MultiplierKind::SerialSerial => {
            let cases: Vec<(SdWord, SdWord)> = (0..count)
                .map(|_| (random_word(&mut rng, n), random_word(&mut rng, n)))
                .collect();
            let parts: Vec<_> = cases
                .par_chunks(STREAM_BATCH)
                .map(|chunk| -> Result<VerifyReport> {
                    let mut report = VerifyReport::empty(Some(kind), Some(mode), n);
                    let mut products = Vec::with_capacity(chunk.len());
                    for (x, y) in chunk {
                        let (z, trace) = mul_ss_run(x, y, mode)?;
                        report = report.merge(check_online_bound(&trace, x, Operand::Digits(y))?);
                        products.push(z);
                    }
                    pipeline_check(&mut report, VectorStream::serial_serial(chunk.to_vec())?, &products, |i| {
                        describe(&chunk[i].0, Operand::Digits(&chunk[i].1))
                    })?;
                    Ok(report)
                })
                .collect();
            reduce(parts, init)
        }
        MultiplierKind::SerialParallel => {
            let half = 1i128 << n;
            let cases: Vec<(SdWord, FixedPoint)> = (0..count)
                .map(|_| {
                    let x = random_word(&mut rng, n);
                    let y = FixedPoint::from_raw(rng.gen_range(-half..half), 1, n);
                    y.map(|y| (x, y))
                })
                .collect::<Result<_>>()?;
            let parts: Vec<_> = cases
                .par_chunks(STREAM_BATCH)
                .map(|chunk| -> Result<VerifyReport> {
                    let mut report = VerifyReport::empty(Some(kind), Some(mode), n);
                    for (x, y) in chunk {
                        let (_, trace) = mul_sp_run(x, y)?;
                        report = report.merge(check_online_bound(&trace, x, Operand::Constant(y))?);
                    }
                    Ok(report)
                })
                .collect();
            reduce(parts, init)
        }
    }
}
