//! Closed-form timing and activity algebra.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::SliceSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierType {
    Sequential,
    Array,
    OnlineSs,
    OnlineSp,
    PipelinedSs,
    PipelinedSp,
}

impl MultiplierType {
    pub const ALL: [MultiplierType; 6] = [
        MultiplierType::Sequential,
        MultiplierType::Array,
        MultiplierType::OnlineSs,
        MultiplierType::OnlineSp,
        MultiplierType::PipelinedSs,
        MultiplierType::PipelinedSp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MultiplierType::Sequential => "sequential",
            MultiplierType::Array => "array",
            MultiplierType::OnlineSs => "online-ss",
            MultiplierType::OnlineSp => "online-sp",
            MultiplierType::PipelinedSs => "pipelined-ss",
            MultiplierType::PipelinedSp => "pipelined-sp",
        }
    }

    /// Online delay, zero for the conventional baselines.
    pub fn delta(self) -> u64 {
        match self {
            MultiplierType::OnlineSs | MultiplierType::PipelinedSs => 3,
            MultiplierType::OnlineSp | MultiplierType::PipelinedSp => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for MultiplierType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MultiplierType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MultiplierType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown multiplier type {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleModel {
    pub multiplier_type: MultiplierType,
    pub n: u64,
    pub k: u64,
}

impl CycleModel {
    pub fn new(multiplier_type: MultiplierType, n: u64, k: u64) -> Self {
        CycleModel { multiplier_type, n, k }
    }

    pub fn delta(&self) -> u64 {
        self.multiplier_type.delta()
    }
}

/// Clock cycles to multiply K vector pairs of n-bit operands.
pub fn cycle_count(m: &CycleModel) -> Result<u64> {
    if m.n == 0 || m.k == 0 {
        return Err(Error::InvalidParams("n and K must be at least 1".into()));
    }
    let (n, k, d) = (m.n, m.k, m.delta());
    Ok(match m.multiplier_type {
        MultiplierType::Sequential => n * k,
        MultiplierType::Array => k,
        MultiplierType::OnlineSs | MultiplierType::OnlineSp => (n + d + 1) * k,
        MultiplierType::PipelinedSs | MultiplierType::PipelinedSp => (n + d + 1) + (k - 1),
    })
}

/// Latency of a chain of dependent online operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainLatency {
    /// Cycle in which the first digit of the final result appears.
    pub first_digit: u64,
    /// Cycle in which its last digit appears.
    pub last_digit: u64,
    /// The same chain with every operation waiting for a full n-cycle
    /// predecessor.
    pub conventional: u64,
}

/// Each online operation starts as soon as its predecessor emits a first
/// digit, `delta_i + 1` cycles after receiving its own first digit; the last
/// of the n digits follows `n - 1` cycles after the first.
pub fn chain_latency(deltas: &[u64], n: u64) -> Result<ChainLatency> {
    if deltas.is_empty() || n == 0 {
        return Err(Error::InvalidParams("chain needs at least one operation and n >= 1".into()));
    }
    let first: u64 = deltas.iter().map(|d| d + 1).sum();
    Ok(ChainLatency {
        first_digit: first,
        last_digit: first + n - 1,
        conventional: n * deltas.len() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActivityTotals {
    /// Implemented residual slices per stage (cycle).
    pub per_stage: Vec<u64>,
    pub cumulative: Vec<u64>,
    pub total: u64,
    pub peak: u64,
}

pub fn activity_totals(schedule: &SliceSchedule) -> ActivityTotals {
    let per_stage: Vec<u64> = schedule.stages.iter().map(|s| s.v_fb as u64).collect();
    let cumulative = per_stage
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    ActivityTotals {
        total: per_stage.iter().sum(),
        peak: per_stage.iter().copied().max().unwrap_or(0),
        per_stage,
        cumulative,
    }
}

/// True when a sequence never rises again after its first decrease.
pub fn is_unimodal(seq: &[u64]) -> bool {
    let mut falling = false;
    for w in seq.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::slice_schedule;
    use crate::selection::RadixParams;
    use crate::trace::WidthMode;
    use proptest::prelude::*;

    fn count(t: MultiplierType, n: u64, k: u64) -> u64 {
        cycle_count(&CycleModel::new(t, n, k)).unwrap()
    }

    #[test]
    fn eight_bit_column() {
        let got: Vec<u64> = MultiplierType::ALL.iter().map(|&t| count(t, 8, 8)).collect();
        assert_eq!(got, vec![64, 8, 96, 88, 19, 18]);
        assert_eq!(count(MultiplierType::PipelinedSs, 32, 8), 43);
        assert_eq!(count(MultiplierType::PipelinedSp, 32, 8), 42);
        assert_eq!(count(MultiplierType::PipelinedSs, 8, 1), count(MultiplierType::OnlineSs, 8, 1));
        assert!(cycle_count(&CycleModel::new(MultiplierType::Array, 0, 1)).is_err());
        assert_eq!("online-sp".parse::<MultiplierType>().unwrap(), MultiplierType::OnlineSp);
        assert!("booth".parse::<MultiplierType>().is_err());
    }

    #[test]
    fn chains() {
        let one = chain_latency(&[3], 8).unwrap();
        assert_eq!((one.first_digit, one.last_digit), (4, 11));
        let three = chain_latency(&[3, 3, 3], 8).unwrap();
        assert_eq!((three.last_digit, three.conventional), (19, 24));
        assert!(chain_latency(&[3], 0).is_err());
        assert!(chain_latency(&[], 8).is_err());
    }

    #[test]
    fn activity_of_sixteen_digit_schedules() {
        let p = RadixParams::serial_serial();
        let red = activity_totals(&slice_schedule(&p, 16, WidthMode::Reduced).unwrap());
        let full = activity_totals(&slice_schedule(&p, 16, WidthMode::Full).unwrap());
        assert_eq!(red.total, 193);
        assert_eq!(full.total, 235);
        assert!(is_unimodal(&red.per_stage) && is_unimodal(&full.per_stage));
        assert_eq!(*red.cumulative.last().unwrap(), 193);
        let eight = slice_schedule(&p, 8, WidthMode::Reduced).unwrap();
        assert_eq!(eight.p, 7);
        assert_eq!(activity_totals(&eight).peak, 10);
    }

    #[test]
    fn unimodal_helper() {
        assert!(is_unimodal(&[1, 2, 2, 3, 1, 0]));
        assert!(!is_unimodal(&[1, 3, 2, 3]));
    }

    proptest! {
        #[test]
        fn pipelined_throughput_is_one_per_clock(n in 1u64..200, k in 2u64..500) {
            for t in [MultiplierType::PipelinedSs, MultiplierType::PipelinedSp] {
                prop_assert_eq!(count(t, n, k) - count(t, n, k - 1), 1);
            }
        }
    }
}
