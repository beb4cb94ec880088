//! Exact n-step distributions of counting chains.
//!
//! `p_{n+1}(k) = (1 - q_k) p_n(k) + q_{k-1} p_n(k-1)` with `p_0(0) = 1`.
//!
//! In exact mode every probability of a dyadic chain is stored as an integer
//! numerator over a shared power-of-two denominator, so the recurrence runs on
//! shifts and additions of big integers. Float mode works for every family and
//! drops edge states whose probability falls below [`FLOAT_TRUNCATION`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::chain_core::{self, CounterParams, Family};
use crate::error::{Error, Result};

/// Edge states with float probability below this are dropped.
pub const FLOAT_TRUNCATION: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Clone)]
enum Probs {
    /// `p(offset + i) = numerators[i] / 2^shift`
    Exact { numerators: Vec<BigInt>, shift: u64 },
    Float {
        probs: Vec<f64>,
        // q_k for k = 0..transition.len(), filled lazily
        transition: Vec<f64>,
    },
}

/// Law of `X_n` for one counter family.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    params: CounterParams,
    n: u64,
    offset: u64,
    probs: Probs,
}

/// Expected random-bit cost of the next update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BitCost {
    /// `E c(t)` with `c(t) = 2 - 2^(1-t)` for `t >= 1` and `c(0) = 0`.
    pub expected_bits: f64,
    /// The same average taken over `2 - t / (2^t - 1)`, a cost figure that is
    /// often quoted for this loop. Kept for comparison only.
    pub quoted_expression: f64,
}

/// Distribution after `n` updates from state 0.
pub fn step_distribution(params: CounterParams, n: u64, mode: Mode) -> Result<StepDistribution> {
    let mut dist = StepDistribution::initial(params, mode)?;
    dist.advance_to(n);
    Ok(dist)
}

/// Expected bit cost of update `n + 1` of a bit-loop counter (fp or Morris).
pub fn expected_bits(params: CounterParams, n: u64, mode: Mode) -> Result<BitCost> {
    step_distribution(params, n, mode)?.expected_bits()
}

/// Float-mode `sqrt(Var f(X_n))` at each of the increasing `checkpoints`,
/// from a single pass of the recurrence.
pub fn std_profile(params: CounterParams, checkpoints: &[u64]) -> Result<Vec<f64>> {
    let mut dist = StepDistribution::initial(params, Mode::Float)?;
    checkpoints
        .iter()
        .map(|&n| {
            dist.advance_to(n);
            Ok(dist.estimator_variance()?.max(0.0).sqrt())
        })
        .collect()
}

fn exponent_of(params: CounterParams, k: u64) -> u64 {
    k >> params.dyadic_bits().unwrap_or(0)
}

impl StepDistribution {
    /// The point mass at state 0.
    pub fn initial(params: CounterParams, mode: Mode) -> Result<Self> {
        let probs = match mode {
            Mode::Exact => {
                if !params.is_exact() {
                    return Err(Error::ExactModeUnsupported(params.family()));
                }
                Probs::Exact {
                    numerators: vec![BigInt::one()],
                    shift: 0,
                }
            }
            Mode::Float => Probs::Float {
                probs: vec![1.0],
                transition: Vec::new(),
            },
        };
        Ok(StepDistribution {
            params,
            n: 0,
            offset: 0,
            probs,
        })
    }

    pub fn params(&self) -> CounterParams {
        self.params
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mode(&self) -> Mode {
        match self.probs {
            Probs::Exact { .. } => Mode::Exact,
            Probs::Float { .. } => Mode::Float,
        }
    }

    /// Lowest and highest stored state.
    pub fn support(&self) -> (u64, u64) {
        let len = match &self.probs {
            Probs::Exact { numerators, .. } => numerators.len(),
            Probs::Float { probs, .. } => probs.len(),
        };
        (self.offset, self.offset + len as u64 - 1)
    }

    /// Applies one update to the distribution.
    pub fn step(&mut self) {
        let params = self.params;
        let offset = self.offset;
        match &mut self.probs {
            Probs::Exact { numerators, shift } => {
                let top = offset + numerators.len() as u64 - 1;
                let grow = exponent_of(params, top);
                let mut next = Vec::with_capacity(numerators.len() + 1);
                let mut carry = BigInt::zero();
                for (i, p) in numerators.iter().enumerate() {
                    let t = exponent_of(params, offset + i as u64);
                    // p q_k in units of 2^-(shift + grow)
                    let moving: BigInt = p << (grow - t);
                    let staying = (p << grow) - &moving;
                    next.push(staying + std::mem::take(&mut carry));
                    carry = moving;
                }
                next.push(carry);
                *numerators = next;
                *shift += grow;
                let leading = numerators.iter().take_while(|p| p.is_zero()).count();
                numerators.drain(..leading);
                self.offset += leading as u64;
            }
            Probs::Float { probs, transition } => {
                let top = offset + probs.len() as u64;
                while (transition.len() as u64) < top {
                    let k = transition.len() as u64;
                    transition.push(chain_core::transition_prob(params, k).to_f64());
                }
                let mut next = Vec::with_capacity(probs.len() + 1);
                let mut carry = 0.0;
                for (i, &p) in probs.iter().enumerate() {
                    let q = transition[offset as usize + i];
                    let moving = q * p;
                    next.push((p - moving) + carry);
                    carry = moving;
                }
                next.push(carry);
                while next.len() > 1 && *next.last().unwrap() < FLOAT_TRUNCATION {
                    next.pop();
                }
                let leading = next
                    .iter()
                    .take(next.len() - 1)
                    .take_while(|&&p| p < FLOAT_TRUNCATION)
                    .count();
                next.drain(..leading);
                self.offset += leading as u64;
                *probs = next;
            }
        }
        self.n += 1;
    }

    /// Steps forward until `n` updates have been applied. Never moves back.
    pub fn advance_to(&mut self, n: u64) {
        while self.n < n {
            self.step();
        }
    }

    pub fn prob(&self, k: u64) -> f64 {
        match &self.probs {
            Probs::Exact { .. } => self.exact_prob(k).and_then(|p| p.to_f64()).unwrap_or(0.0),
            Probs::Float { probs, .. } => k
                .checked_sub(self.offset)
                .and_then(|i| probs.get(i as usize))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// Exact `p_n(k)`; `None` in float mode.
    pub fn exact_prob(&self, k: u64) -> Option<BigRational> {
        match &self.probs {
            Probs::Exact { numerators, shift } => {
                let p = k
                    .checked_sub(self.offset)
                    .and_then(|i| numerators.get(i as usize))
                    .cloned()
                    .unwrap_or_default();
                Some(BigRational::new(p, BigInt::one() << *shift))
            }
            Probs::Float { .. } => None,
        }
    }

    /// `(k, p_n(k))` over the stored support, as doubles.
    pub fn iter_f64(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let (lo, hi) = self.support();
        (lo..=hi).map(move |k| (k, self.prob(k)))
    }

    /// Exact `sum_k p_n(k) w(k)` for integer weights.
    fn exact_expectation(&self, weight: impl Fn(u64) -> Result<BigInt>) -> Result<BigRational> {
        match &self.probs {
            Probs::Exact { numerators, shift } => {
                let mut total = BigInt::zero();
                for (i, p) in numerators.iter().enumerate() {
                    total += p * weight(self.offset + i as u64)?;
                }
                Ok(BigRational::new(total, BigInt::one() << *shift))
            }
            Probs::Float { .. } => Err(Error::InvalidParams(
                "exact moments need an exact-mode distribution".into(),
            )),
        }
    }

    fn float_expectation(&self, weight: impl Fn(u64) -> Result<f64>) -> Result<f64> {
        self.iter_f64()
            .map(|(k, p)| Ok(p * weight(k)?))
            .sum::<Result<f64>>()
    }

    pub fn exact_total(&self) -> Result<BigRational> {
        self.exact_expectation(|_| Ok(BigInt::one()))
    }

    pub fn total(&self) -> f64 {
        self.iter_f64().map(|(_, p)| p).sum()
    }

    /// `E f(X_n)`.
    pub fn exact_expected_estimate(&self) -> Result<BigRational> {
        self.exact_expectation(|k| chain_core::estimate_exact(self.params, k))
    }

    /// `E f(X_n)^2 - n^2`.
    pub fn exact_estimator_variance(&self) -> Result<BigRational> {
        let second = self.exact_expectation(|k| {
            let f = chain_core::estimate_exact(self.params, k)?;
            Ok(&f * &f)
        })?;
        let n = BigRational::from_integer(BigInt::from(self.n));
        Ok(second - &n * &n)
    }

    /// `E g(X_n)`.
    pub fn exact_expected_variance_fn(&self) -> Result<BigRational> {
        self.exact_expectation(|k| chain_core::variance_fn_exact(self.params, k))
    }

    pub fn expected_estimate(&self) -> Result<f64> {
        match self.mode() {
            Mode::Exact => Ok(to_f64(&self.exact_expected_estimate()?)),
            Mode::Float => self.float_expectation(|k| chain_core::estimate(self.params, k)),
        }
    }

    /// `Var f(X_n)`. Float mode sums squared deviations from the computed mean.
    pub fn estimator_variance(&self) -> Result<f64> {
        match self.mode() {
            Mode::Exact => Ok(to_f64(&self.exact_estimator_variance()?)),
            Mode::Float => {
                let mean = self.expected_estimate()?;
                self.float_expectation(|k| {
                    let dev = chain_core::estimate(self.params, k)? - mean;
                    Ok(dev * dev)
                })
            }
        }
    }

    pub fn expected_variance_fn(&self) -> Result<f64> {
        match self.mode() {
            Mode::Exact => Ok(to_f64(&self.exact_expected_variance_fn()?)),
            Mode::Float => self.float_expectation(|k| chain_core::variance_fn(self.params, k)),
        }
    }

    /// Coefficient of variation `sqrt(Var f(X_n)) / n`.
    pub fn accuracy(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::UndefinedAtZero("accuracy"));
        }
        Ok(self.estimator_variance()?.max(0.0).sqrt() / self.n as f64)
    }

    /// Expected bits drawn by the next update of a bit-loop counter.
    pub fn expected_bits(&self) -> Result<BitCost> {
        if self.params.family() == Family::QAry {
            return Err(Error::WrongFamily {
                expected: "fp",
                found: Family::QAry,
            });
        }
        let params = self.params;
        match self.mode() {
            Mode::Exact => {
                let pairs: Vec<(BigRational, u64)> = {
                    let (lo, hi) = self.support();
                    (lo..=hi)
                        .map(|k| (self.exact_prob(k).unwrap(), exponent_of(params, k)))
                        .collect()
                };
                let mut bits = BigRational::zero();
                let mut quoted = BigRational::zero();
                for (p, t) in pairs {
                    if t == 0 {
                        continue;
                    }
                    let two = BigRational::from_integer(2.into());
                    let pow: BigInt = BigInt::one() << t;
                    bits += &p * (&two - BigRational::new(2.into(), pow.clone()));
                    quoted += &p * (two - BigRational::new(t.into(), pow - 1));
                }
                Ok(BitCost {
                    expected_bits: to_f64(&bits),
                    quoted_expression: to_f64(&quoted),
                })
            }
            Mode::Float => {
                let mut cost = BitCost {
                    expected_bits: 0.0,
                    quoted_expression: 0.0,
                };
                for (k, p) in self.iter_f64() {
                    let t = exponent_of(params, k);
                    cost.expected_bits += p * per_call_bits(t);
                    cost.quoted_expression += p * quoted_per_call_bits(t);
                }
                Ok(cost)
            }
        }
    }
}

/// Expected bits drawn by one bit-loop update at exponent `t`.
pub fn per_call_bits(t: u64) -> f64 {
    if t == 0 {
        0.0
    } else {
        2.0 - (1.0 - t as f64).exp2()
    }
}

/// `2 - t / (2^t - 1)`, zero at `t = 0`.
pub fn quoted_per_call_bits(t: u64) -> f64 {
    if t == 0 {
        0.0
    } else {
        2.0 - t as f64 / ((t as f64).exp2() - 1.0)
    }
}

fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
