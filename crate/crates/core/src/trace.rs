//! Per-cycle observables recorded by the engines.

use serde::{Deserialize, Serialize};

use crate::exact::ExactFraction;
use crate::residual::CarrySave;
use crate::sdnum::{FixedPoint, SdWord, SignedDigit};
use crate::selection::{Estimate, MultiplierKind};

/// Which part of the algorithm a cycle belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// The first delta cycles: operands are absorbed, no digit is produced.
    Init,
    /// Inputs arrive and one product digit leaves per cycle.
    Recurrence,
    /// The last delta cycles: no inputs, digits still leave.
    Final,
}

/// Working-precision policy of a serial-serial run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthMode {
    /// Every cycle keeps all bits its inputs can produce.
    Full,
    /// Low-order slices are dropped once the working precision p is reached.
    Reduced,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub j: i32,
    pub phase: Phase,
    /// Operand digits entering this cycle; `None` when the cycle takes none.
    pub x_in: Option<SignedDigit>,
    pub y_in: Option<SignedDigit>,
    /// Converted operand windows fed to the selectors (x before its append,
    /// y after), already cut to the widths the stage implements.
    pub x_ca: Option<FixedPoint>,
    pub y_ca: Option<FixedPoint>,
    /// The carry-save pair `(vs, vc)` of v[j].
    pub v: CarrySave,
    pub vhat: Option<Estimate>,
    pub z: Option<SignedDigit>,
    /// Product converted so far, `z[j+1]`.
    pub z_partial: Option<FixedPoint>,
    /// Residual registers after the update and shift, `2 w[j+1]`.
    pub w_next: CarrySave,
}

impl TraceRow {
    /// v[j] as one two's-complement word.
    pub fn v_word(&self) -> FixedPoint {
        self.v.resolve()
    }

    pub fn v_value(&self) -> ExactFraction {
        self.v.value()
    }

    /// The residual `w[j+1]` left behind by this cycle.
    pub fn w_value(&self) -> ExactFraction {
        self.w_next.value().shl(-1)
    }

    /// `2^-(j+1)` for cycles that emit a digit.
    pub fn error_bound(&self) -> Option<ExactFraction> {
        self.z.map(|_| ExactFraction::pow2(-(self.j as i64 + 1)))
    }
}

/// A complete single-multiplication record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub kind: MultiplierKind,
    pub n: u32,
    pub mode: WidthMode,
    pub p: u32,
    pub rows: Vec<TraceRow>,
    pub product: SdWord,
}

impl Trace {
    pub fn product_value(&self) -> ExactFraction {
        self.product.value()
    }
}
