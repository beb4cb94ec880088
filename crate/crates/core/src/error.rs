use thiserror::Error;

use crate::chain_core::Family;

/// Errors raised by the counter library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid counter parameters: {0}")]
    InvalidParams(String),

    /// A ratio or coefficient that divides by `f(0)` or `n = 0`.
    #[error("{0} is undefined at zero")]
    UndefinedAtZero(&'static str),

    #[error("operation requires the {expected} family, got {found}")]
    WrongFamily {
        expected: &'static str,
        found: Family,
    },

    #[error("exact arithmetic is not available for the {0} family")]
    ExactModeUnsupported(Family),

    #[error("{what} overflows the double-precision range at state {k}")]
    Overflow { what: &'static str, k: u64 },

    #[error("counter is saturated at state {0}")]
    Saturated(u64),

    #[error("index {index} out of range for table of {len} slots")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid slot width {width} for d = {d} (need d + 1 <= width <= 32)")]
    InvalidWidth { width: u32, d: u32 },

    #[error("a counter table needs at least one slot")]
    EmptyTable,

    #[error("value {value} does not fit in a {width}-bit slot")]
    SlotValue { value: u64, width: u32 },

    #[error("invalid checkpoints: {0}")]
    Checkpoints(String),

    #[error("at least 2 replicates are required, got {0}")]
    TooFewReplicates(usize),

    #[error("reports cannot be merged: {0}")]
    ReportMismatch(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
