//! Approximate counting with floating-point, Morris and q-ary counters.
//!
//! A floating-point counter with `d` significand bits keeps a state
//! `k = 2^d t + u` and increments it with probability `2^-t`, using nothing
//! but random bits and integer shifts. The estimate `(2^d + u) 2^t - 2^d` is
//! unbiased, and the state fits in `d + lg lg n + O(1)` bits.
//!
//! * [`chain_core`]: estimators, variance functions and accuracy limits.
//! * [`randbits`]: seeded random bits with exact accounting.
//! * [`counters`]: counter state machines.
//! * [`oracle`]: exact n-step distributions used as ground truth.
//! * [`ensemble`]: Monte Carlo trajectories and replicate statistics.
//! * [`counter_table`]: bit-packed tables of floating-point counters.
//! * [`cli`]: the `fpcounter` command-line front end.
//!
//! ```
//! use fpcounter::{BitSource, Counter, CounterParams};
//!
//! let params = CounterParams::floating_point(4).unwrap();
//! let mut counter = Counter::new();
//! let mut bits = BitSource::new(7);
//! for _ in 0..16 {
//!     counter.increment(params, &mut bits).unwrap();
//! }
//! // the first 2^d updates are exact
//! assert_eq!(counter.estimate(params).unwrap(), 16.0);
//! ```

pub mod chain_core;
pub mod cli;
pub mod counter_table;
pub mod counters;
pub mod ensemble;
mod error;
pub mod oracle;
pub mod randbits;

pub use chain_core::{AccuracyBounds, CounterParams, Family, TransitionProb};
pub use counter_table::CounterTable;
pub use counters::Counter;
pub use ensemble::{EnsembleReport, TrajectoryPoint};
pub use error::{Error, Result};
pub use oracle::{Mode, StepDistribution};
pub use randbits::{BitSource, RandomBits, ScriptedBits};
