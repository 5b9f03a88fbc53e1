//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The sweeps shared by several criteria run once and are cached.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use olmul_core::exact::ExactFraction;
use olmul_core::golden;
use olmul_core::metrics::{cycle_count, CycleModel, MultiplierType};
use olmul_core::olmul_sp::{mul_sp_run_with, sp_cycle, SpRegisters};
use olmul_core::olmul_ss::{full_width_stage, mul_ss_run, mul_ss_run_with, ss_cycle, SsRegisters};
use olmul_core::oracle::{
    check_online_bound, exhaustive_verify, random_verify, FailureKind, Operand, VerifyReport,
};
use olmul_core::pipeline::{pipe_run_stream, slice_schedule, working_precision, Backend, VectorStream};
use olmul_core::residual::CarrySave;
use olmul_core::selection::{derive_bounds, minimal_feasible, MultiplierKind, RadixParams};
use olmul_core::trace::{Phase, WidthMode};
use olmul_core::{FixedPoint, SdWord, SignedDigit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes past the test harness's output capture so every line lands in
/// the log whether or not the test passes.
fn verdict(criterion: u32, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {tag} | {detail}");
}

struct Timed {
    report: VerifyReport,
    elapsed: Duration,
}

fn timed(f: impl FnOnce() -> VerifyReport) -> Timed {
    let t = Instant::now();
    let report = f();
    Timed {
        report,
        elapsed: t.elapsed(),
    }
}

struct Sweeps {
    golden: VerifyReport,
    ss_full: Timed,
    ss_reduced: Timed,
    sp: Timed,
    random_reduced: Timed,
    random_full: Timed,
}

fn sweeps() -> &'static Sweeps {
    static CELL: OnceLock<Sweeps> = OnceLock::new();
    CELL.get_or_init(|| {
        let table = golden::table2().unwrap();
        let (_, trace) = table.run().unwrap();
        let golden = check_online_bound(&trace, &table.x, Operand::Digits(&table.y)).unwrap();
        let ss = MultiplierKind::SerialSerial;
        Sweeps {
            golden,
            ss_full: timed(|| exhaustive_verify(8, ss, WidthMode::Full).unwrap()),
            ss_reduced: timed(|| exhaustive_verify(8, ss, WidthMode::Reduced).unwrap()),
            sp: timed(|| exhaustive_verify(8, MultiplierKind::SerialParallel, WidthMode::Full).unwrap()),
            random_reduced: timed(|| random_verify(16, 10_000, 2024, ss, WidthMode::Reduced).unwrap()),
            random_full: timed(|| random_verify(16, 10_000, 2025, ss, WidthMode::Full).unwrap()),
        }
    })
}

fn count_kind(r: &VerifyReport, kind: FailureKind) -> usize {
    r.failures.iter().filter(|f| f.kind == kind).count()
}

#[test]
fn criterion_1_golden_trace() {
    let table = golden::table2().unwrap();
    let report = golden::check(&table).unwrap();
    let expected_product: ExactFraction = "-0.2103424072265625".parse().unwrap();
    let gap_ok = (report.gap.to_f64() - 5.657784640789032e-6).abs() < 1e-21
        && report.gap < ExactFraction::pow2(-16);
    let (_, trace) = table.run().unwrap();
    let rows_ok = trace.rows.len() == 19 && trace.p == 13;
    // The single printed field that disagrees is v[13]; the table's own
    // rows 12 and 14 force a different value, which the engine produces.
    let only_row13 = report.mismatches.len() == 1
        && report.mismatches[0].j == 13
        && report.mismatches[0].field == "v"
        && report.table_inconsistencies == vec![13, 14]
        && report.passed();
    let ok = rows_ok && report.product == expected_product && gap_ok && only_row13;
    let detail = format!(
        "19 rows, p=13, product {} gap {:.15e}; every field digit-exact except printed v[13]={} \
         (table rows 12 and 14 both imply {}, which the engine produces)",
        report.product,
        report.gap.to_f64(),
        report.mismatches.first().map_or("-", |m| m.expected.as_str()),
        report.mismatches.first().map_or("-", |m| m.got.as_str()),
    );
    verdict(1, ok, &detail);
    assert!(ok, "{:?}", report.mismatches);
}

#[test]
fn criterion_2_exhaustive_serial_serial() {
    let s = sweeps();
    let ok = [&s.ss_full, &s.ss_reduced].iter().all(|t| {
        t.report.passed() && t.report.cases_run >= 1 << 16 && t.report.max_abs_error < ExactFraction::pow2(-8)
    });
    let detail = format!(
        "full: {} cases, {} failures, max |z-xy| {} ({:.1?}); reduced p=7: {} cases, {} failures, max |z-xy| {} ({:.1?})",
        s.ss_full.report.cases_run,
        s.ss_full.report.failure_count,
        s.ss_full.report.max_abs_error,
        s.ss_full.elapsed,
        s.ss_reduced.report.cases_run,
        s.ss_reduced.report.failure_count,
        s.ss_reduced.report.max_abs_error,
        s.ss_reduced.elapsed,
    );
    verdict(2, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_3_exhaustive_serial_parallel() {
    let s = sweeps();
    let r = &s.sp.report;
    let ok = r.passed() && r.cases_run >= 1 << 16 && r.max_abs_error < ExactFraction::pow2(-8);
    let detail = format!(
        "{} (x, Y) cases, {} failures, max |z-xY| {} ({:.1?})",
        r.cases_run, r.failure_count, r.max_abs_error, s.sp.elapsed
    );
    verdict(3, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_4_pipelined_equals_sequential() {
    let s = sweeps();
    let parts = [&s.ss_full, &s.ss_reduced, &s.sp, &s.random_reduced, &s.random_full];
    let mismatches: usize = parts
        .iter()
        .map(|t| count_kind(&t.report, FailureKind::PipelineMismatch))
        .sum();
    let all_checked = parts.iter().all(|t| t.report.pipeline_checked == t.report.cases_run);
    let ok = mismatches == 0 && all_checked && parts.iter().all(|t| t.report.passed());
    let detail = format!(
        "pipelined streams compared: exhaustive n=8 ss full {} + reduced {} + sp {}; random n=16 reduced {} + full {}; {} mismatches",
        s.ss_full.report.pipeline_checked,
        s.ss_reduced.report.pipeline_checked,
        s.sp.report.pipeline_checked,
        s.random_reduced.report.pipeline_checked,
        s.random_full.report.pipeline_checked,
        mismatches
    );
    verdict(4, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_5_per_cycle_bounds() {
    let s = sweeps();
    let all = [
        ("golden", &s.golden),
        ("ss full", &s.ss_full.report),
        ("ss reduced", &s.ss_reduced.report),
        ("sp", &s.sp.report),
        ("random reduced", &s.random_reduced.report),
        ("random full", &s.random_full.report),
    ];
    let online_ok = all.iter().all(|(_, r)| r.passed());
    let half = ExactFraction::pow2(-1);
    let gap_ok = all.iter().all(|(_, r)| {
        r.min_estimate_gap.as_ref().is_none_or(|g| !g.is_negative())
            && r.max_estimate_gap.as_ref().is_none_or(|g| *g < half)
    });
    let three_q: ExactFraction = "0.75".parse().unwrap();
    let residual_ok = all.iter().all(|(_, r)| r.max_residual <= three_q);
    let residuals: Vec<String> = all
        .iter()
        .map(|(name, r)| format!("{name} max|w| {} ({} cycles over 3/4)", r.max_residual, r.residual_excursions))
        .collect();
    // The smallest witness: x = y = 0.111 gives w[0] = x[0] y[0] = 49/64
    // before any digit has been selected.
    let x: SdWord = "11100000".parse().unwrap();
    let (_, trace) = mul_ss_run(&x, &x, WidthMode::Full).unwrap();
    let w0 = trace.rows.iter().find(|r| r.j == -1).unwrap().w_value();
    let detail = format!(
        "online bound |x[j]y[j]-z[j]| < 2^-j on every cycle: {}; estimate gap in [0, 2^(1-t) - ulp]: {}; \
         residual |w[j]| <= 3/4: {} [{}]; witness x=y=0.11100000 has w[0] = {} (= 49/64); \
         selection still converges because the estimate range [-2, 7/4] absorbs the excess",
        if online_ok { "holds" } else { "VIOLATED" },
        if gap_ok { "holds" } else { "VIOLATED" },
        if residual_ok { "holds" } else { "VIOLATED" },
        residuals.join("; "),
        w0,
    );
    let ok = online_ok && gap_ok && residual_ok;
    verdict(5, ok, &detail);
    assert!(online_ok && gap_ok, "online bound or estimate gap violated");
    assert!(residual_ok, "residual bound |w| <= 3/4 exceeded: {}", residuals.join("; "));
}

#[test]
fn criterion_6_timing_algebra() {
    let expected: [(MultiplierType, [u64; 4]); 6] = [
        (MultiplierType::Sequential, [64, 128, 192, 256]),
        (MultiplierType::Array, [8, 8, 8, 8]),
        (MultiplierType::OnlineSs, [96, 160, 224, 288]),
        (MultiplierType::OnlineSp, [88, 152, 216, 280]),
        (MultiplierType::PipelinedSs, [19, 27, 35, 43]),
        (MultiplierType::PipelinedSp, [18, 26, 34, 42]),
    ];
    let mut matched = 0;
    for (t, row) in expected {
        for (n, want) in [8u64, 16, 24, 32].into_iter().zip(row) {
            if cycle_count(&CycleModel::new(t, n, 8)).unwrap() == want {
                matched += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut sims = 0;
    let mut sim_ok = 0;
    for n in [8u32, 16] {
        for k in [1usize, 2, 8, 64] {
            for (kind, ty) in [
                (MultiplierKind::SerialSerial, MultiplierType::PipelinedSs),
                (MultiplierKind::SerialParallel, MultiplierType::PipelinedSp),
            ] {
                let word = |rng: &mut ChaCha8Rng| {
                    SdWord::new((0..n).map(|_| SignedDigit::ALL[rng.gen_range(0..3)]).collect())
                };
                let vs = match kind {
                    MultiplierKind::SerialSerial => VectorStream::serial_serial(
                        (0..k).map(|_| (word(&mut rng), word(&mut rng))).collect(),
                    ),
                    MultiplierKind::SerialParallel => {
                        let y = FixedPoint::from_raw(rng.gen_range(-(1i128 << n)..(1i128 << n)), 1, n).unwrap();
                        VectorStream::serial_parallel((0..k).map(|_| word(&mut rng)).collect(), y)
                    }
                }
                .unwrap();
                for mode in [WidthMode::Full, WidthMode::Reduced] {
                    sims += 1;
                    let got = pipe_run_stream(&vs, mode).unwrap().cycles;
                    let want = cycle_count(&CycleModel::new(ty, n as u64, k as u64)).unwrap();
                    if got == want {
                        sim_ok += 1;
                    }
                }
            }
        }
    }
    let ok = matched == 24 && sim_ok == sims;
    verdict(
        6,
        ok,
        &format!("{matched}/24 cycle counts match; {sim_ok}/{sims} simulated streams (K in 1,2,8,64) match the formula"),
    );
    assert!(ok);
}

#[test]
fn criterion_7_precision_reduction() {
    // The published module counts follow from the formula at t = 1, the
    // estimate width claimed for serial-serial selection; the implemented
    // selection needs t = 2, which moves n = 16 to p = 13 as in the
    // 16-digit reference trace.
    let ps: Vec<u32> = [8, 16, 24, 32].iter().map(|&n| working_precision(n, 3, 1)).collect();
    let ps_t2: Vec<u32> = [8, 16, 24, 32].iter().map(|&n| working_precision(n, 3, 2)).collect();
    let params = RadixParams::serial_serial();
    let sched_ps: Vec<u32> = [8, 16, 24, 32]
        .iter()
        .map(|&n| slice_schedule(&params, n, WidthMode::Reduced).unwrap().p)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0u64;
    let mut outside = 0u64;
    let mut bound_fail = 0u64;
    for n in [8u32, 16, 24, 32] {
        let sched = slice_schedule(&params, n, WidthMode::Reduced).unwrap();
        for _ in 0..1500 {
            let word = |rng: &mut ChaCha8Rng| {
                SdWord::new((0..n).map(|_| SignedDigit::ALL[rng.gen_range(0..3)]).collect())
            };
            let (x, y) = (word(&mut rng), word(&mut rng));
            let mut regs = SsRegisters::new(-3);
            let mut z = Vec::new();
            for stage in &sched.stages {
                let i = (stage.j + 4) as usize;
                let (xd, yd) = (x.digit(i), y.digit(i));
                let red = ss_cycle(&params, &regs, xd, yd, stage, Backend::Behavioral).unwrap();
                if stage.truncating {
                    let full_stage = full_width_stage(stage, 3);
                    let full = ss_cycle(&params, &regs, xd, yd, &full_stage, Backend::Behavioral).unwrap();
                    compared += 1;
                    let w = stage.v_fb as i32;
                    let (rv, fv) = (red.row.v, full.row.v);
                    let sum_agrees = (-1..=w - 3).all(|p| rv.sum.bit(p) == fv.sum.bit(p));
                    let carry_agrees = (-1..=w - 4).all(|p| rv.carry.bit(p) == fv.carry.bit(p));
                    if !(sum_agrees && carry_agrees) {
                        outside += 1;
                    }
                }
                if let Some(d) = red.z {
                    z.push(d);
                }
                regs = red.regs;
            }
            let z = SdWord::new(z);
            if (z.value() - x.value() * y.value()).abs() >= ExactFraction::pow2(-(n as i64)) {
                bound_fail += 1;
            }
        }
    }
    let ok = ps == vec![7, 12, 18, 23]
        && ps_t2 == vec![7, 13, 18, 23]
        && sched_ps == ps_t2
        && compared > 0
        && outside == 0
        && bound_fail == 0;
    verdict(
        7,
        ok,
        &format!(
            "p(t=1) = {ps:?}; p(t=2, implemented) = {ps_t2:?}, schedules use {sched_ps:?}; {compared} truncating cycles compared against full width from identical registers, \
             {outside} differ outside the 3 dropped LSB slices; {bound_fail} reduced products miss 2^-n"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_selection_derivation() {
    let half = ExactFraction::pow2(-1);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [MultiplierKind::SerialSerial, MultiplierKind::SerialParallel] {
        let b = derive_bounds(&RadixParams::for_kind(kind)).unwrap();
        let this = b.m[0] == -half.clone()
            && b.m[1] == half
            && b.vhat_min == ExactFraction::from_int(-2)
            && b.vhat_max == "1.75".parse().unwrap()
            && b.omega_hi == "0.75".parse().unwrap();
        ok &= this;
        parts.push(format!(
            "{}: m0={} m1={} vhat in [{}, {}] omega={}",
            kind.short_name(),
            b.m[0],
            b.m[1],
            b.vhat_min,
            b.vhat_max,
            b.omega_hi
        ));
    }
    let sp_min = minimal_feasible(MultiplierKind::SerialParallel);
    ok &= sp_min == Some((2, 2));
    parts.push(format!("minimal sp (t, delta) = {sp_min:?}"));
    verdict(8, ok, &parts.join("; "));
    assert!(ok);
}

fn random_digit(rng: &mut ChaCha8Rng) -> SignedDigit {
    SignedDigit::ALL[rng.gen_range(0..3)]
}

fn random_pair(rng: &mut ChaCha8Rng, fb: u32) -> CarrySave {
    let lim = 1i128 << (fb + 1);
    let mut f = || FixedPoint::from_raw(rng.gen_range(-lim..lim), 2, fb).unwrap();
    CarrySave::new(f(), f()).unwrap()
}

#[test]
fn criterion_9_structural_equals_behavioral() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let states = 100_000;
    let mut differ = 0u64;
    let ss = RadixParams::serial_serial();
    let sp = RadixParams::serial_parallel();
    let scheds: Vec<_> = [8u32, 12, 16, 24, 32]
        .iter()
        .flat_map(|&n| {
            [
                slice_schedule(&ss, n, WidthMode::Reduced).unwrap(),
                slice_schedule(&ss, n, WidthMode::Full).unwrap(),
                slice_schedule(&sp, n, WidthMode::Full).unwrap(),
            ]
        })
        .collect();
    for _ in 0..states {
        let sched = &scheds[rng.gen_range(0..scheds.len())];
        let stage = &sched.stages[rng.gen_range(0..sched.stages.len())];
        let final_phase = stage.phase == Phase::Final;
        let (xd, yd) = if final_phase {
            (SignedDigit::ZERO, SignedDigit::ZERO)
        } else {
            (random_digit(&mut rng), random_digit(&mut rng))
        };
        let w = random_pair(&mut rng, stage.residual_fb);
        let same = match sched.kind {
            MultiplierKind::SerialSerial => {
                let mut regs = SsRegisters::new(stage.j);
                for _ in 0..(stage.j + 3).min(sched.n as i32) {
                    regs.xa = regs.xa.append(random_digit(&mut rng));
                    regs.ya = regs.ya.append(random_digit(&mut rng));
                }
                regs.w = w;
                let a = ss_cycle(&ss, &regs, xd, yd, stage, Backend::Behavioral).unwrap();
                let b = ss_cycle(&ss, &regs, xd, yd, stage, Backend::Structural).unwrap();
                a.row == b.row && a.regs == b.regs
            }
            MultiplierKind::SerialParallel => {
                let mut regs = SpRegisters::new(stage.j);
                regs.w = w;
                let n = sched.n;
                let y = FixedPoint::from_raw(rng.gen_range(-(1i128 << n)..(1i128 << n)), 1, n).unwrap();
                let a = sp_cycle(&sp, &regs, &y, xd, stage, Backend::Behavioral).unwrap();
                let b = sp_cycle(&sp, &regs, &y, xd, stage, Backend::Structural).unwrap();
                a.row == b.row && a.regs == b.regs
            }
        };
        if !same {
            differ += 1;
        }
    }
    let table = golden::table2().unwrap();
    let beh = mul_ss_run_with(&table.x, &table.y, WidthMode::Reduced, Backend::Behavioral).unwrap();
    let st = mul_ss_run_with(&table.x, &table.y, WidthMode::Reduced, Backend::Structural).unwrap();
    let y = FixedPoint::from_exact(&table.y_value, 1, 16).unwrap();
    let sp_same = mul_sp_run_with(&table.x, &y, Backend::Behavioral).unwrap()
        == mul_sp_run_with(&table.x, &y, Backend::Structural).unwrap();
    let ok = differ == 0 && beh == st && sp_same;
    verdict(
        9,
        ok,
        &format!(
            "{states} random register states: {differ} differ; reference run structural == behavioral: {}",
            beh == st && sp_same
        ),
    );
    assert!(ok);
}
