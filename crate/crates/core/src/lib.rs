//! IRSA-BPR coded random access over the noiseless binary adder channel.
//!
//! The library covers the full pipeline of the scheme:
//!
//! * [`field`]: exact GF(2^m) arithmetic and binary images of field elements;
//! * [`bpr`]: BPR multiple-access codebooks built from the parity-check
//!   matrix of a T-error-correcting binary BCH code, partitioned among K
//!   users, with a zero-error multi-codeword block decoder;
//! * [`encoding`]: irregular repetition degree distributions and the
//!   message-to-frame encoder (repetition degree and slot positions are
//!   derived from the message through a combinadic unranking);
//! * [`channel`]: the K-input noiseless binary adder channel;
//! * [`sic`]: iterative successive-interference-cancellation decoding of a
//!   whole frame;
//! * [`asymptotics`]: density-evolution load thresholds and
//!   achievability/converse sum-rate bounds;
//! * [`sim`]: seeded, reproducible Monte Carlo simulation with CSV output.

pub mod asymptotics;
pub mod bpr;
pub mod channel;
pub mod encoding;
pub mod field;
pub mod sic;
pub mod sim;

use std::fmt;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration is invalid (user-correctable).
    InvalidParameter(String),
    /// An internal invariant was violated; signals a bug or corrupted input.
    Inconsistent(String),
    /// A numerical procedure failed (e.g. no bisection bracket).
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Inconsistent(msg) => write!(f, "internal inconsistency: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
