//! Counter state machines.
//!
//! Morris and floating-point counters increment through the integer-only bit
//! loop of [`RandomBits::bernoulli_pow2`]; Morris is the `d = 0` case of that
//! loop. q-ary counters compare one 53-bit uniform against `2^(-k/r)`.

use crate::chain_core::{self, split_state, CounterParams};
use crate::error::{Error, Result};
use crate::randbits::RandomBits;

/// Default saturation ceiling.
pub const DEFAULT_MAX_STATE: u64 = (1 << 16) - 1;

/// State of one approximate counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counter {
    k: u64,
    saturated: bool,
    max_state: u64,
}

impl Default for Counter {
    fn default() -> Self {
        Counter::new()
    }
}

impl Counter {
    pub fn new() -> Self {
        Counter::with_max_state(DEFAULT_MAX_STATE)
    }

    /// A fresh counter that saturates once its state reaches `max_state`.
    pub fn with_max_state(max_state: u64) -> Self {
        Counter {
            k: 0,
            saturated: max_state == 0,
            max_state,
        }
    }

    /// A counter already sitting at state `k`.
    pub fn at_state(k: u64) -> Self {
        let mut counter = Counter::with_max_state(DEFAULT_MAX_STATE.max(k));
        counter.k = k;
        counter.saturated = k == counter.max_state;
        counter
    }

    pub fn state(&self) -> u64 {
        self.k
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn max_state(&self) -> u64 {
        self.max_state
    }

    /// Applies one update. Returns whether the state advanced.
    ///
    /// A counter that reaches `max_state` becomes saturated; further updates
    /// fail with [`Error::Saturated`] and its estimate is a lower bound.
    pub fn increment<R: RandomBits + ?Sized>(
        &mut self,
        params: CounterParams,
        src: &mut R,
    ) -> Result<bool> {
        if self.saturated {
            return Err(Error::Saturated(self.k));
        }
        let advance = step(params, self.k, src);
        if advance {
            self.k += 1;
            if self.k >= self.max_state {
                self.saturated = true;
            }
        }
        Ok(advance)
    }

    pub fn estimate(&self, params: CounterParams) -> Result<f64> {
        chain_core::estimate(params, self.k)
    }

    /// Bits needed to hold the current state, `ceil(lg(k + 1))`, at least 1.
    pub fn storage_bits(&self) -> u32 {
        storage_bits(self.k)
    }
}

/// One transition attempt from state `k`; true means `k -> k + 1`.
#[inline]
pub fn step<R: RandomBits + ?Sized>(params: CounterParams, k: u64, src: &mut R) -> bool {
    match params {
        CounterParams::QAry { .. } => {
            let q = chain_core::transition_prob(params, k).to_f64();
            src.next_uniform53() < q
        }
        CounterParams::Morris => src.bernoulli_pow2(k),
        CounterParams::FloatingPoint { d } => src.bernoulli_pow2(k >> d),
    }
}

/// Exponent and significand `(t, u)` of a floating-point state, `k = M t + u`.
pub fn decompose(k: u64, params: CounterParams) -> Result<(u64, u64)> {
    match params {
        CounterParams::FloatingPoint { d } => Ok(split_state(k, d)),
        other => Err(Error::WrongFamily {
            expected: "fp",
            found: other.family(),
        }),
    }
}

pub fn storage_bits(k: u64) -> u32 {
    (u64::BITS - k.leading_zeros()).max(1)
}
