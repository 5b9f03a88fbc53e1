//! `olmul`: run online multiplications with per-cycle traces, stream
//! vectors through the pipelined arrays, verify against the exact oracle and
//! print cycle-count reports.

mod config;
mod operand;
mod render;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use olmul_core::golden;
use olmul_core::metrics::{cycle_count, CycleModel, MultiplierType};
use olmul_core::olmul_sp::mul_sp_run;
use olmul_core::olmul_ss::mul_ss_run;
use olmul_core::oracle::{check_online_bound, exhaustive_verify, random_verify, Operand, VerifyReport};
use olmul_core::pipeline::{pipe_run_stream, VectorStream};
use olmul_core::selection::MultiplierKind;
use olmul_core::trace::WidthMode;
use olmul_core::{ExactFraction, FixedPoint, SdWord, SignedDigit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use config::FileConfig;
use operand::parse_operand;
use render::{csv, jsonl, render_trace, table, Format};

/// Largest case count `verify --random` accepts.
const MAX_RANDOM_COUNT: u64 = 10_000_000;

#[derive(Parser, Debug)]
#[command(name = "olmul", version, about = "Radix-2 online multiplier simulator")]
struct Cli {
    /// Flat `key = value` file (with `#` comments) supplying any flag;
    /// flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format [default: table]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multiply one operand pair and print the per-cycle trace.
    Mul(MulArgs),
    /// Stream K vectors through the pipelined array.
    Stream(StreamArgs),
    /// Check the engines against the exact oracle.
    Verify(VerifyArgs),
    /// Print the clock-cycle comparison grid.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Ss,
    Sp,
}

impl std::str::FromStr for KindArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <KindArg as ValueEnum>::from_str(s, true)
    }
}

impl From<KindArg> for MultiplierKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ss => MultiplierKind::SerialSerial,
            KindArg::Sp => MultiplierKind::SerialParallel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Full,
    Reduced,
}

impl std::str::FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <ModeArg as ValueEnum>::from_str(s, true)
    }
}

impl From<ModeArg> for WidthMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => WidthMode::Full,
            ModeArg::Reduced => WidthMode::Reduced,
        }
    }
}

#[derive(Args, Debug)]
struct MulArgs {
    /// ss (both operands serial) or sp (constant Y) [default: ss]
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Digits per operand [default: length of a digit-string x, else 16]
    #[arg(long)]
    n: Option<u32>,
    /// full or reduced working precision (serial-serial only) [default: full]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Serial operand: digits such as 1T01 (T = -1), a decimal, or a
    /// value with an sd:, dec: or hex: prefix.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Second serial operand (serial-serial).
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Constant operand in [-1, 1) (serial-parallel).
    #[arg(long = "Y", allow_hyphen_values = true)]
    big_y: Option<String>,
}

#[derive(Args, Debug)]
struct StreamArgs {
    /// [default: ss]
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// [default: 8]
    #[arg(long)]
    n: Option<u32>,
    /// [default: full]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Number of random vectors when no vector file is given [default: 8]
    #[arg(long = "K")]
    k: Option<usize>,
    /// Seed for random vectors [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// File with one vector per line: `x y` (ss) or `x` (sp).
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Constant operand for sp streams [default: random]
    #[arg(long = "Y", allow_hyphen_values = true)]
    big_y: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Every operand pair of precision n (n <= 10).
    #[arg(long)]
    exhaustive: bool,
    /// Seeded random operand pairs.
    #[arg(long)]
    random: bool,
    /// Compare against a built-in reference trace (table2).
    #[arg(long)]
    golden: Option<String>,
    /// [default: ss]
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// [default: 8 exhaustive, 16 random]
    #[arg(long)]
    n: Option<u32>,
    /// [default: full]
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Random cases [default: 1000]
    #[arg(long)]
    count: Option<u64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Vectors per stream [default: 8]
    #[arg(long = "K")]
    k: Option<u64>,
    /// Operand widths [default: 8,16,24,32]
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
}

/// What a command produced: the artifact text and whether every check held.
struct Outcome {
    artifact: String,
    /// Human-readable notes that do not belong in machine-readable output.
    notes: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let format = file.pick(cli.format, "format")?.unwrap_or_default();
    let output = file.pick(cli.output.clone(), "output")?;
    let outcome = match &cli.command {
        Command::Mul(a) => cmd_mul(a, &file, format)?,
        Command::Stream(a) => cmd_stream(a, &file, format)?,
        Command::Verify(a) => cmd_verify(a, &file, format)?,
        Command::Report(a) => cmd_report(a, &file, format)?,
    };
    emit(&outcome, format, output.as_deref())?;
    Ok(outcome.ok)
}

/// Table output carries the notes inline; machine formats keep the artifact
/// clean and send notes to standard error.
fn emit(o: &Outcome, format: Format, output: Option<&Path>) -> Result<()> {
    let mut body = o.artifact.clone();
    if format == Format::Table && !o.notes.is_empty() {
        body.push('\n');
        body.push_str(&o.notes);
    } else if !o.notes.is_empty() {
        eprint!("{}", o.notes);
    }
    match output {
        Some(p) => {
            std::fs::write(p, &body).with_context(|| format!("writing {}", p.display()))?;
            if format == Format::Table {
                eprintln!("wrote {}", p.display());
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn cmd_mul(a: &MulArgs, file: &FileConfig, format: Format) -> Result<Outcome> {
    let kind: MultiplierKind = file.pick(a.kind, "kind")?.unwrap_or(KindArg::Ss).into();
    let mode_arg = file.pick(a.mode, "mode")?;
    let x_text = file
        .pick(a.x.clone(), "x")?
        .ok_or_else(|| anyhow!("--x is required"))?;
    let n_cli = file.pick(a.n, "n")?;
    let x_op = parse_operand(&x_text, n_cli)?;
    let n = n_cli.or(x_op.digit_len()).unwrap_or(16);
    let x = x_op.to_word(n).context("operand x")?;
    let (trace, report, exact) = match kind {
        MultiplierKind::SerialSerial => {
            let y_text = file
                .pick(a.y.clone(), "y")?
                .ok_or_else(|| anyhow!("--y is required for serial-serial"))?;
            let y = parse_operand(&y_text, Some(n))?.to_word(n).context("operand y")?;
            let mode: WidthMode = mode_arg.unwrap_or(ModeArg::Full).into();
            let (_, trace) = mul_ss_run(&x, &y, mode)?;
            let report = check_online_bound(&trace, &x, Operand::Digits(&y))?;
            (trace, report, x.value() * y.value())
        }
        MultiplierKind::SerialParallel => {
            if mode_arg == Some(ModeArg::Reduced) {
                bail!("the serial-parallel multiplier has no reduced-precision mode");
            }
            let y_text = file
                .pick(a.big_y.clone(), "Y")?
                .ok_or_else(|| anyhow!("--Y is required for serial-parallel"))?;
            let y = parse_operand(&y_text, Some(n))?.to_constant(n).context("operand Y")?;
            let (_, trace) = mul_sp_run(&x, &y)?;
            let report = check_online_bound(&trace, &x, Operand::Constant(&y))?;
            (trace, report, x.value() * y.value())
        }
    };
    let z = trace.product_value();
    let err = (z.clone() - exact.clone()).abs();
    let mut notes = String::new();
    let _ = writeln!(notes, "product  z = {} = {}", trace.product, z);
    let _ = writeln!(notes, "exact    x*y = {exact}");
    let _ = writeln!(
        notes,
        "error    |z - x*y| = {err} ({:.6e}) {} 2^-{n}",
        err.to_f64(),
        if err < ExactFraction::pow2(-(n as i64)) { "<" } else { ">=" }
    );
    let _ = writeln!(
        notes,
        "checks   {} ({} cycles, max residual {})",
        if report.passed() { "ok" } else { "FAILED" },
        trace.rows.len(),
        report.max_residual
    );
    for f in &report.failures {
        let _ = writeln!(notes, "  {:?} at cycle {:?}: {} vs bound {}", f.kind, f.cycle, f.observed, f.bound);
    }
    Ok(Outcome {
        artifact: render_trace(&trace, format),
        notes,
        ok: report.passed(),
    })
}

fn random_word(rng: &mut ChaCha8Rng, n: u32) -> SdWord {
    SdWord::new((0..n).map(|_| SignedDigit::ALL[rng.gen_range(0..3)]).collect())
}

fn read_vectors(path: &Path, kind: MultiplierKind, n: Option<u32>) -> Result<(u32, Vec<(SdWord, Option<SdWord>)>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    let mut n = n;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let want = match kind {
            MultiplierKind::SerialSerial => 2,
            MultiplierKind::SerialParallel => 1,
        };
        if fields.len() != want {
            bail!("{}:{}: expected {want} operand(s), found {}", path.display(), i + 1, fields.len());
        }
        let first = parse_operand(fields[0], n)?;
        let width = *n.get_or_insert(first.digit_len().unwrap_or(8));
        let x = first.to_word(width).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let y = match fields.get(1) {
            Some(f) => Some(
                parse_operand(f, Some(width))?
                    .to_word(width)
                    .with_context(|| format!("{}:{}", path.display(), i + 1))?,
            ),
            None => None,
        };
        out.push((x, y));
    }
    if out.is_empty() {
        bail!("{} holds no vectors", path.display());
    }
    Ok((n.unwrap_or(8), out))
}

#[derive(Serialize)]
struct ProductRecord {
    vector: usize,
    x: String,
    y: String,
    z: String,
    value: String,
}

fn cmd_stream(a: &StreamArgs, file: &FileConfig, format: Format) -> Result<Outcome> {
    let kind: MultiplierKind = file.pick(a.kind, "kind")?.unwrap_or(KindArg::Ss).into();
    let mode_arg = file.pick(a.mode, "mode")?;
    if kind == MultiplierKind::SerialParallel && mode_arg == Some(ModeArg::Reduced) {
        bail!("the serial-parallel multiplier has no reduced-precision mode");
    }
    let mode: WidthMode = mode_arg.unwrap_or(ModeArg::Full).into();
    let seed = file.pick(a.seed, "seed")?.unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_cli = file.pick(a.n, "n")?;
    let (n, vectors) = match file.pick(a.vectors.clone(), "vectors")? {
        Some(p) => read_vectors(&p, kind, n_cli)?,
        None => {
            let n = n_cli.unwrap_or(8);
            let k = file.pick(a.k, "K")?.unwrap_or(8);
            if k == 0 {
                bail!("K must be at least 1");
            }
            let v = (0..k)
                .map(|_| {
                    let x = random_word(&mut rng, n);
                    let y = (kind == MultiplierKind::SerialSerial).then(|| random_word(&mut rng, n));
                    (x, y)
                })
                .collect();
            (n, v)
        }
    };
    let k = vectors.len();
    let (stream, y_const) = match kind {
        MultiplierKind::SerialSerial => (
            VectorStream::serial_serial(
                vectors.iter().map(|(x, y)| (x.clone(), y.clone().expect("ss vectors carry y"))).collect(),
            )?,
            None,
        ),
        MultiplierKind::SerialParallel => {
            let y = match file.pick(a.big_y.clone(), "Y")? {
                Some(t) => parse_operand(&t, Some(n))?.to_constant(n)?,
                None => FixedPoint::from_raw(rng.gen_range(-(1i128 << n)..(1i128 << n)), 1, n)?,
            };
            (
                VectorStream::serial_parallel(vectors.iter().map(|(x, _)| x.clone()).collect(), y)?,
                Some(y),
            )
        }
    };
    let result = pipe_run_stream(&stream, mode)?;
    let ty = match kind {
        MultiplierKind::SerialSerial => MultiplierType::PipelinedSs,
        MultiplierKind::SerialParallel => MultiplierType::PipelinedSp,
    };
    let formula = cycle_count(&CycleModel::new(ty, n as u64, k as u64))?;
    let mut ok = result.cycles == formula;
    let mut records = Vec::with_capacity(k);
    let mut mismatched = Vec::new();
    for (i, ((x, y), z)) in vectors.iter().zip(&result.products).enumerate() {
        let (single, y_text) = match (y, y_const) {
            (Some(y), _) => (mul_ss_run(x, y, mode)?.0, y.to_string()),
            (None, Some(c)) => (mul_sp_run(x, &c)?.0, c.to_string()),
            _ => unreachable!("every vector has a second operand"),
        };
        if &single != z {
            mismatched.push(i);
        }
        records.push(ProductRecord {
            vector: i,
            x: x.to_string(),
            y: y_text,
            z: z.to_string(),
            value: z.value().to_string(),
        });
    }
    ok &= mismatched.is_empty();
    let artifact = match format {
        Format::Table | Format::Csv => {
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| vec![r.vector.to_string(), r.x.clone(), r.y.clone(), r.z.clone(), r.value.clone()])
                .collect();
            let header = ["vector", "x", "y", "z", "value"];
            if format == Format::Table {
                table(&header, &rows)
            } else {
                csv(&header, &rows)
            }
        }
        Format::Jsonl => jsonl(&records),
    };
    let mut notes = String::new();
    let _ = writeln!(notes, "cycles={}", result.cycles);
    let _ = writeln!(notes, "formula={formula} ({})", if result.cycles == formula { "match" } else { "MISMATCH" });
    let activity: Vec<String> = result.activity.iter().map(u64::to_string).collect();
    let _ = writeln!(notes, "activity={}", activity.join(","));
    let _ = writeln!(
        notes,
        "single-run cross-check: {}",
        if mismatched.is_empty() {
            "all products equal".to_string()
        } else {
            format!("vectors {mismatched:?} differ")
        }
    );
    Ok(Outcome { artifact, notes, ok })
}

fn report_lines(r: &VerifyReport) -> Vec<(String, String)> {
    let opt = |v: &Option<ExactFraction>| v.as_ref().map_or("-".to_string(), |g| g.to_string());
    let mut lines = vec![
        ("kind".into(), r.kind.map_or("-".into(), |k| k.short_name().to_string())),
        ("mode".into(), r.mode.map_or("-".into(), |m| format!("{m:?}").to_lowercase())),
        ("n".into(), r.n.to_string()),
        ("cases".into(), r.cases_run.to_string()),
        ("failures".into(), r.failure_count.to_string()),
        ("max_abs_error".into(), r.max_abs_error.to_string()),
        ("max_bound_ratio".into(), r.max_bound_ratio.to_string()),
        ("max_residual".into(), r.max_residual.to_string()),
        ("residual_cycles_over_3/4".into(), r.residual_excursions.to_string()),
        ("min_estimate_gap".into(), opt(&r.min_estimate_gap)),
        ("max_estimate_gap".into(), opt(&r.max_estimate_gap)),
        ("pipeline_checked".into(), r.pipeline_checked.to_string()),
    ];
    for (i, f) in r.failures.iter().take(10).enumerate() {
        lines.push((
            format!("failure_{i}"),
            format!("{:?} {} cycle {:?}: {} vs {}", f.kind, f.inputs, f.cycle, f.observed, f.bound),
        ));
    }
    lines
}

fn key_values(lines: &[(String, String)], format: Format) -> String {
    let rows: Vec<Vec<String>> = lines.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    match format {
        Format::Table => table(&["key", "value"], &rows),
        _ => csv(&["key", "value"], &rows),
    }
}

fn cmd_verify(a: &VerifyArgs, file: &FileConfig, format: Format) -> Result<Outcome> {
    let golden_name = file.pick(a.golden.clone(), "golden")?;
    let modes = [a.exhaustive, a.random, golden_name.is_some()];
    if modes.iter().filter(|&&m| m).count() != 1 {
        bail!("choose exactly one of --exhaustive, --random or --golden NAME");
    }
    if let Some(name) = golden_name {
        let table_data = golden::builtin(&name)?;
        let r = golden::check(&table_data)?;
        let mut lines = vec![
            ("golden".to_string(), name.clone()),
            ("rows".into(), table_data.rows.len().to_string()),
            ("mismatches".into(), r.mismatches.len().to_string()),
            ("explained".into(), r.explained.len().to_string()),
            ("product".into(), r.product.to_string()),
            ("gap".into(), format!("{} ({:.15e})", r.gap, r.gap.to_f64())),
        ];
        for m in &r.mismatches {
            let why = if r.explained.contains(m) {
                " (printed row contradicts its neighbours; engine gives the implied value)"
            } else {
                ""
            };
            lines.push((
                format!("row_{}_{}", m.j, m.field),
                format!("table {} engine {}{why}", m.expected, m.got),
            ));
        }
        let artifact = match format {
            Format::Jsonl => jsonl(&[&r]),
            _ => key_values(&lines, format),
        };
        return Ok(Outcome {
            artifact,
            notes: String::new(),
            ok: r.passed(),
        });
    }
    let kind: MultiplierKind = file.pick(a.kind, "kind")?.unwrap_or(KindArg::Ss).into();
    let mode: WidthMode = file.pick(a.mode, "mode")?.unwrap_or(ModeArg::Full).into();
    if kind == MultiplierKind::SerialParallel && mode == WidthMode::Reduced {
        bail!("the serial-parallel multiplier has no reduced-precision mode");
    }
    let report = if a.exhaustive {
        let n = file.pick(a.n, "n")?.unwrap_or(8);
        exhaustive_verify(n, kind, mode)?
    } else {
        let n = file.pick(a.n, "n")?.unwrap_or(16);
        let count = file.pick(a.count, "count")?.unwrap_or(1000);
        if count > MAX_RANDOM_COUNT {
            bail!("--count is limited to {MAX_RANDOM_COUNT}");
        }
        let seed = file.pick(a.seed, "seed")?.unwrap_or(1);
        random_verify(n, count, seed, kind, mode)?
    };
    let artifact = match format {
        Format::Jsonl => jsonl(&[&report]),
        _ => key_values(&report_lines(&report), format),
    };
    Ok(Outcome {
        artifact,
        notes: String::new(),
        ok: report.passed(),
    })
}

fn formula(t: MultiplierType) -> &'static str {
    match t {
        MultiplierType::Sequential => "n*K",
        MultiplierType::Array => "K",
        MultiplierType::OnlineSs => "(n+3+1)*K",
        MultiplierType::OnlineSp => "(n+2+1)*K",
        MultiplierType::PipelinedSs => "(n+3+1)+(K-1)",
        MultiplierType::PipelinedSp => "(n+2+1)+(K-1)",
    }
}

#[derive(Serialize)]
struct CycleRecord {
    multiplier: &'static str,
    n: u64,
    k: u64,
    cycles: u64,
}

fn cmd_report(a: &ReportArgs, file: &FileConfig, format: Format) -> Result<Outcome> {
    let k = file.pick(a.k, "K")?.unwrap_or(8);
    let ns = match (&a.n, file.raw("n")) {
        (Some(v), _) => v.clone(),
        (None, Some(s)) => s
            .split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|e| anyhow!("config key n: {e}")))
            .collect::<Result<_>>()?,
        (None, None) => vec![8, 16, 24, 32],
    };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for t in MultiplierType::ALL {
        let mut row = vec![t.name().to_string(), formula(t).to_string()];
        for &n in &ns {
            let c = cycle_count(&CycleModel::new(t, n, k))?;
            row.push(c.to_string());
            records.push(CycleRecord {
                multiplier: t.name(),
                n,
                k,
                cycles: c,
            });
        }
        rows.push(row);
    }
    let ns_text: Vec<String> = ns.iter().map(|n| format!("n={n}")).collect();
    let mut header = vec!["multiplier", "cycles"];
    header.extend(ns_text.iter().map(String::as_str));
    let artifact = match format {
        Format::Table => table(&header, &rows),
        Format::Csv => {
            let plain: Vec<String> = ns.iter().map(u64::to_string).collect();
            let mut h = vec!["multiplier", "cycles"];
            h.extend(plain.iter().map(String::as_str));
            csv(&h, &rows)
        }
        Format::Jsonl => jsonl(&records),
    };
    Ok(Outcome {
        artifact,
        notes: format!("K={k}\n"),
        ok: true,
    })
}
