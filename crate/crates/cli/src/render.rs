//! Table, csv and json-lines rendering.

use std::fmt::Write as _;

use clap::ValueEnum;
use olmul_core::golden::clear_operand;
use olmul_core::trace::{Trace, TraceRow};
use olmul_core::SignedDigit;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

pub const TRACE_COLUMNS: [&str; 10] = [
    "j", "x_in", "y_in", "x_ca", "y_ca", "v", "v_hat", "z_sd", "z_value", "bound",
];

/// One trace row with every field already in its printed form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceCells {
    pub j: i32,
    pub x_in: Option<i8>,
    pub y_in: Option<i8>,
    pub x_ca: Option<String>,
    pub y_ca: Option<String>,
    pub v: String,
    pub v_hat: Option<String>,
    pub z_sd: Option<i8>,
    pub z_value: Option<String>,
    pub bound: Option<String>,
    /// Exponent of `bound`, kept for the `2^e` form of the table.
    #[serde(skip)]
    pub bound_exp: Option<i32>,
}

impl TraceCells {
    pub fn from_row(row: &TraceRow) -> Self {
        let digit = |d: Option<SignedDigit>| d.map(|d| d.value());
        TraceCells {
            j: row.j,
            x_in: digit(row.x_in),
            y_in: digit(row.y_in),
            x_ca: row.x_ca.map(|c| clear_operand(&c)),
            y_ca: row.y_ca.map(|c| {
                if c.ib() == 1 {
                    c.to_bit_string()
                } else {
                    clear_operand(&c)
                }
            }),
            v: row.v_word().to_bit_string(),
            v_hat: row.vhat.map(|e| e.bits().to_bit_string()),
            z_sd: digit(row.z),
            z_value: row.z_partial.map(|p| p.value().to_string()),
            bound: row.error_bound().map(|b| b.to_string()),
            bound_exp: row.z.map(|_| -(row.j + 1)),
        }
    }
}

fn table_digit(d: Option<i8>) -> String {
    match d {
        Some(-1) => "T".into(),
        Some(v) => v.to_string(),
        None => "-".into(),
    }
}

fn csv_digit(d: Option<i8>) -> String {
    d.map_or(String::new(), |v| v.to_string())
}

fn opt(s: &Option<String>, none: &str) -> String {
    s.clone().unwrap_or_else(|| none.to_string())
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
    out
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| csv_escape(c)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn jsonl<T: Serialize>(records: &[T]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

pub fn render_trace(trace: &Trace, format: Format) -> String {
    let cells: Vec<TraceCells> = trace.rows.iter().map(TraceCells::from_row).collect();
    match format {
        Format::Table => {
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|c| {
                    vec![
                        c.j.to_string(),
                        table_digit(c.x_in),
                        table_digit(c.y_in),
                        opt(&c.x_ca, "-"),
                        opt(&c.y_ca, "-"),
                        c.v.clone(),
                        opt(&c.v_hat, "-"),
                        table_digit(c.z_sd),
                        opt(&c.z_value, "-"),
                        c.bound_exp.map_or("-".into(), |e| format!("2^{e}")),
                    ]
                })
                .collect();
            table(&TRACE_COLUMNS, &rows)
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|c| {
                    vec![
                        c.j.to_string(),
                        csv_digit(c.x_in),
                        csv_digit(c.y_in),
                        opt(&c.x_ca, ""),
                        opt(&c.y_ca, ""),
                        c.v.clone(),
                        opt(&c.v_hat, ""),
                        csv_digit(c.z_sd),
                        opt(&c.z_value, ""),
                        opt(&c.bound, ""),
                    ]
                })
                .collect();
            csv(&TRACE_COLUMNS, &rows)
        }
        Format::Jsonl => jsonl(&cells),
    }
}
