use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("digit encoding (1,1) is not canonical")]
    NonCanonicalDigit,
    #[error("digit value {0} is outside {{-1, 0, 1}}")]
    DigitOutOfRange(i64),
    #[error("unknown digit character {0:?} (expected '1', '0' or 'T')")]
    BadDigitChar(char),
    #[error("empty digit string")]
    EmptyDigits,
    #[error("value {value} is not representable with {bits} fractional bits")]
    NotRepresentable { value: String, bits: u32 },
    #[error("value {value} is out of range for {what}")]
    OutOfRange { value: String, what: &'static str },
    #[error("cannot parse {0:?} as an exact dyadic number")]
    BadNumber(String),
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(String, String),
    #[error("fixed-point word of {0} bits exceeds the supported 120")]
    TooWide(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("precision n = {n} is invalid ({why})")]
    InvalidPrecision { n: u32, why: &'static str },
    #[error("operand length mismatch: expected {expected} digits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no input accepted after cycle {0}")]
    PastEnd(i32),
    #[error("nonzero input digit during the last-delta cycles (cycle {0})")]
    NonzeroFinalInput(i32),
    #[error("selection violation: digit {digit} does not match estimate {estimate}")]
    SelectionViolation { digit: i8, estimate: String },
    #[error("estimate {0} is outside the selection table")]
    EstimateOutOfRange(String),
    #[error("wrong arity for slice {kind}: expected {expected} inputs, got {got}")]
    SliceArity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty vector stream")]
    EmptyStream,
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("fixture error: {0}")]
    Fixture(String),
}
