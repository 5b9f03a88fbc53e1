//! Operand entry: signed-digit strings, exact decimals or hexadecimal
//! fixed point, selected by an optional `sd:`, `dec:` or `hex:` prefix.

use anyhow::{anyhow, bail, Context, Result};
use olmul_core::{ExactFraction, FixedPoint, SdWord};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperandText {
    Digits(SdWord),
    Value(ExactFraction),
}

fn parse_hex(s: &str, n: u32) -> Result<ExactFraction> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let body = body.strip_prefix("0x").unwrap_or(body);
    let raw = i128::from_str_radix(body, 16).with_context(|| format!("bad hexadecimal {s:?}"))?;
    let raw = if neg { -raw } else { raw };
    Ok(ExactFraction::new(raw, n))
}

/// Without a prefix, strings made only of `1`, `0` and `T` are digit
/// strings and everything else is decimal. Hex operands are integers
/// scaled by `2^-n`.
pub fn parse_operand(s: &str, n: Option<u32>) -> Result<OperandText> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("sd:") {
        return Ok(OperandText::Digits(rest.parse()?));
    }
    if let Some(rest) = s.strip_prefix("dec:") {
        return Ok(OperandText::Value(rest.parse()?));
    }
    if let Some(rest) = s.strip_prefix("hex:") {
        let n = n.ok_or_else(|| anyhow!("hex operands need --n"))?;
        return Ok(OperandText::Value(parse_hex(rest, n)?));
    }
    if !s.is_empty() && s.chars().all(|c| matches!(c, '0' | '1' | 'T')) {
        return Ok(OperandText::Digits(s.parse()?));
    }
    Ok(OperandText::Value(s.parse()?))
}

impl OperandText {
    pub fn digit_len(&self) -> Option<u32> {
        match self {
            OperandText::Digits(w) => Some(w.len() as u32),
            OperandText::Value(_) => None,
        }
    }

    /// An n-digit serial operand in (-1, 1).
    pub fn to_word(&self, n: u32) -> Result<SdWord> {
        match self {
            OperandText::Digits(w) => {
                if w.len() as u32 != n {
                    bail!("operand has {} digits, expected {n}", w.len());
                }
                Ok(w.clone())
            }
            OperandText::Value(v) => Ok(SdWord::from_fixed(v, n as usize)?),
        }
    }

    /// A `(1, n)` two's-complement constant in [-1, 1).
    pub fn to_constant(&self, n: u32) -> Result<FixedPoint> {
        let v = match self {
            OperandText::Digits(w) => w.value(),
            OperandText::Value(v) => v.clone(),
        };
        if v < ExactFraction::from_int(-1) || v >= ExactFraction::one() {
            bail!("constant {v} is outside [-1, 1)");
        }
        Ok(FixedPoint::from_exact(&v, 1, n)?)
    }
}
