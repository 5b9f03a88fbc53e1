//! Bit- and cycle-accurate simulation of radix-2 online (most significant
//! digit first) multipliers.
//!
//! The crate covers the serial-serial and serial-parallel recurrences, their
//! digit-level pipelined arrays with reduced working precision, an exact
//! reference oracle, and the closed-form cycle-count algebra used to compare
//! them with conventional multipliers.

pub mod error;
pub mod exact;
pub mod golden;
pub mod metrics;
pub mod olmul_sp;
pub mod olmul_ss;
pub mod oracle;
pub mod otfc;
pub mod pipeline;
pub mod residual;
pub mod sdnum;
pub mod selection;
pub mod trace;

pub use error::{Error, Result};
pub use exact::ExactFraction;
pub use sdnum::{FixedPoint, SdWord, SignedDigit};
