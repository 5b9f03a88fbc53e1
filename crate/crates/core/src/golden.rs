//! The built-in 16-digit serial-serial reference trace and a field-by-field
//! comparison against the engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactFraction;
use crate::olmul_ss::mul_ss_run;
use crate::sdnum::{FixedPoint, SdWord, SignedDigit};
use crate::trace::{Trace, TraceRow, WidthMode};

const TABLE2_JSON: &str = include_str!("../fixtures/table2.json");

/// Names accepted by [`builtin`].
pub const BUILTIN: [&str; 1] = ["table2"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenRow {
    pub j: i32,
    pub x_in: Option<SignedDigit>,
    pub y_in: Option<SignedDigit>,
    /// Digits of the operand registers actually used by the reduced array,
    /// one integer bit.
    pub x: Option<String>,
    pub y: Option<String>,
    /// `v[j]` as printed, two integer bits, at the stage's width.
    pub v: String,
    pub z: Option<SignedDigit>,
    /// Conventional value of the product digits emitted so far.
    pub conventional: Option<ExactFraction>,
    /// Exponent e of the error bound `2^e`.
    pub bound_exp: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenTable {
    pub n: u32,
    pub p: u32,
    pub x: SdWord,
    pub y: SdWord,
    pub x_value: ExactFraction,
    pub y_value: ExactFraction,
    pub product: ExactFraction,
    /// `|z - x y|` as printed (decimal, rounded).
    pub gap: f64,
    pub rows: Vec<GoldenRow>,
}

pub fn table2() -> Result<GoldenTable> {
    serde_json::from_str(TABLE2_JSON).map_err(|e| Error::Fixture(e.to_string()))
}

pub fn builtin(name: &str) -> Result<GoldenTable> {
    match name {
        "table2" => table2(),
        _ => Err(Error::Fixture(format!("no built-in golden trace named {name:?}"))),
    }
}

impl GoldenTable {
    /// Runs the engine on the table's operands in reduced mode.
    pub fn run(&self) -> Result<(SdWord, Trace)> {
        mul_ss_run(&self.x, &self.y, WidthMode::Reduced)
    }

    fn row(&self, j: i32) -> Option<&GoldenRow> {
        self.rows.iter().find(|r| r.j == j)
    }

    /// Rows without operand input whose printed `v[j]` differs from
    /// `2 (v[j-1] - z[j-1])`, the only update possible in those cycles.
    pub fn final_phase_inconsistencies(&self) -> Result<Vec<i32>> {
        let mut bad = Vec::new();
        for r in self.rows.iter().filter(|r| r.x_in.is_none()) {
            if let Some(implied) = self.implied_final_v(r.j)? {
                let printed: FixedPoint = r.v.parse()?;
                if printed.value() != implied {
                    bad.push(r.j);
                }
            }
        }
        Ok(bad)
    }

    /// `2 (v[j-1] - z[j-1])` wrapped into the two-integer-bit frame, from
    /// the printed previous row.
    pub fn implied_final_v(&self, j: i32) -> Result<Option<ExactFraction>> {
        let Some(prev) = self.row(j - 1) else {
            return Ok(None);
        };
        let Some(z) = prev.z else { return Ok(None) };
        let v: FixedPoint = prev.v.parse()?;
        let w = (v.value() - ExactFraction::from_int(z.value() as i64)).shl(1);
        let fb = v.fb().saturating_sub(1);
        Ok(Some(FixedPoint::from_raw_unchecked(wrap_raw(&w, fb)?, 2, fb).value()))
    }
}

fn wrap_raw(w: &ExactFraction, fb: u32) -> Result<i128> {
    let raw = w
        .scaled_numerator(fb)
        .ok_or_else(|| Error::Fixture(format!("{w} has more than {fb} fractional bits")))?;
    let m = num_bigint::BigInt::from(1i128 << (fb + 2));
    let half = num_bigint::BigInt::from(1i128 << (fb + 1));
    let mut r = ((raw % &m) + &m) % &m;
    if r >= half {
        r -= m;
    }
    i128::try_from(r).map_err(|e| Error::Fixture(e.to_string()))
}

/// Operand register digits as printed: one integer bit, at least one
/// fractional digit.
pub fn clear_operand(ca: &FixedPoint) -> String {
    ca.with_ib(1).with_fb(ca.fb().max(1)).to_bit_string()
}

fn digit_str(d: Option<SignedDigit>) -> String {
    d.map_or("-".into(), |d| d.to_char().to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub j: i32,
    pub field: &'static str,
    pub expected: String,
    pub got: String,
}

fn row_mismatches(g: &GoldenRow, r: &TraceRow, out: &mut Vec<Mismatch>) {
    let mut check = |field: &'static str, expected: String, got: String| {
        if expected != got {
            out.push(Mismatch {
                j: g.j,
                field,
                expected,
                got,
            });
        }
    };
    check("x_in", digit_str(g.x_in), digit_str(r.x_in));
    check("y_in", digit_str(g.y_in), digit_str(r.y_in));
    check(
        "x",
        g.x.clone().unwrap_or("-".into()),
        r.x_ca.map_or("-".into(), |c| clear_operand(&c)),
    );
    check(
        "y",
        g.y.clone().unwrap_or("-".into()),
        r.y_ca.map_or("-".into(), |c| clear_operand(&c)),
    );
    check("v", g.v.clone(), r.v_word().to_bit_string());
    check("z", digit_str(g.z), digit_str(r.z));
    check(
        "conventional",
        g.conventional.as_ref().map_or("-".into(), |c| c.to_string()),
        r.z_partial.map_or("-".into(), |p| p.value().to_string()),
    );
    check(
        "bound",
        g.bound_exp.map_or("-".into(), |e| ExactFraction::pow2(e as i64).to_string()),
        r.error_bound().map_or("-".into(), |b| b.to_string()),
    );
}

/// Every field of every row that differs between the table and a trace.
pub fn compare(table: &GoldenTable, trace: &Trace) -> Vec<Mismatch> {
    let mut out = Vec::new();
    if trace.rows.len() != table.rows.len() {
        out.push(Mismatch {
            j: 0,
            field: "rows",
            expected: table.rows.len().to_string(),
            got: trace.rows.len().to_string(),
        });
    }
    for g in &table.rows {
        match trace.rows.iter().find(|r| r.j == g.j) {
            Some(r) => row_mismatches(g, r, &mut out),
            None => out.push(Mismatch {
                j: g.j,
                field: "row",
                expected: "present".into(),
                got: "missing".into(),
            }),
        }
    }
    if trace.p != table.p {
        out.push(Mismatch {
            j: 0,
            field: "p",
            expected: table.p.to_string(),
            got: trace.p.to_string(),
        });
    }
    out
}

/// Outcome of checking the engine against a golden table.
#[derive(Clone, Debug, Serialize)]
pub struct GoldenReport {
    pub mismatches: Vec<Mismatch>,
    /// Rows the table itself contradicts (see
    /// [`GoldenTable::final_phase_inconsistencies`]).
    pub table_inconsistencies: Vec<i32>,
    /// Mismatches confined to self-inconsistent rows where the engine
    /// produced the value implied by the neighbouring rows.
    pub explained: Vec<Mismatch>,
    pub product: ExactFraction,
    pub gap: ExactFraction,
}

impl GoldenReport {
    /// True when every mismatch is explained by an inconsistent table row.
    pub fn passed(&self) -> bool {
        self.mismatches.len() == self.explained.len()
    }
}

pub fn check(table: &GoldenTable) -> Result<GoldenReport> {
    let (z, trace) = table.run()?;
    let mismatches = compare(table, &trace);
    let table_inconsistencies = table.final_phase_inconsistencies()?;
    let mut explained = Vec::new();
    for m in &mismatches {
        if m.field != "v" || !table_inconsistencies.contains(&m.j) {
            continue;
        }
        // The engine value must restore consistency on both sides.
        let Some(from_prev) = table.implied_final_v(m.j)? else { continue };
        let got: FixedPoint = m.got.parse()?;
        let next_ok = match table.row(m.j + 1) {
            Some(next) if next.x_in.is_none() => {
                let zj = table.row(m.j).and_then(|r| r.z).map_or(0, |d| d.value() as i64);
                let w = (got.value() - ExactFraction::from_int(zj)).shl(1);
                let nv: FixedPoint = next.v.parse()?;
                let fb = got.fb().saturating_sub(1);
                FixedPoint::from_raw_unchecked(wrap_raw(&w, fb)?, 2, fb).value() == nv.value()
            }
            _ => true,
        };
        if got.value() == from_prev && next_ok {
            explained.push(m.clone());
        }
    }
    let product = z.value();
    let gap = (product.clone() - table.x_value.clone() * table.y_value.clone()).abs();
    Ok(GoldenReport {
        mismatches,
        table_inconsistencies,
        explained,
        product,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_loads() {
        let t = table2().unwrap();
        assert_eq!(t.rows.len(), 19);
        assert_eq!(t.x.value(), t.x_value);
        assert_eq!(t.y.value(), t.y_value);
        assert!(builtin("table3").is_err());
    }

    #[test]
    fn printed_row_thirteen_contradicts_its_neighbours() {
        let t = table2().unwrap();
        assert_eq!(t.final_phase_inconsistencies().unwrap(), vec![13, 14]);
        let implied = t.implied_final_v(13).unwrap().unwrap();
        assert_eq!(implied, "-0.34375".parse().unwrap());
        let mut fixed = t.clone();
        fixed.rows.iter_mut().find(|r| r.j == 13).unwrap().v = "11.101010000".into();
        assert!(fixed.final_phase_inconsistencies().unwrap().is_empty());
    }

    #[test]
    fn engine_matches_everything_else() {
        let t = table2().unwrap();
        let r = check(&t).unwrap();
        assert!(r.passed(), "{:?}", r.mismatches);
        assert_eq!(r.mismatches.len(), 1);
        assert_eq!((r.mismatches[0].j, r.mismatches[0].field), (13, "v"));
        assert_eq!(r.mismatches[0].got, "11.101010000");
        assert_eq!(r.product, t.product);
    }

    #[test]
    fn clear_digits() {
        let f: FixedPoint = "00.0".parse().unwrap();
        assert_eq!(clear_operand(&f.with_fb(0)), "0.0");
        let g: FixedPoint = "11.1011".parse().unwrap();
        assert_eq!(clear_operand(&g), "1.1011");
    }
}
