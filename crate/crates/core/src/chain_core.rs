//! Counting chains and their unbiased estimators.
//!
//! A counting chain starts at state 0 and moves from `k` to `k + 1` with
//! probability `q_k`, otherwise it stays put. Every such chain has a unique
//! unbiased estimator `f(k) = 1/q_0 + ... + 1/q_{k-1}` and a variance function
//! `g(k) = sum_{i<k} (1 - q_i) / q_i^2` with `Var f(X_n) = E g(X_n)`.
//!
//! Three families are supported:
//!
//! * Morris: `q_k = 2^-k`.
//! * q-ary: `q_k = q^-k` with `q = 2^(1/r)`.
//! * floating-point: `q_k = 2^-floor(k / M)` with `M = 2^d`.
//!
//! Morris and floating-point chains have dyadic transition probabilities, so
//! `f` and `g` are integers and are available exactly as [`BigInt`]. The q-ary
//! family is irrational and only has a double-precision path.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest significand width accepted for floating-point counters.
pub const MAX_SIGNIFICAND_BITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Morris,
    #[serde(rename = "qary")]
    QAry,
    #[serde(rename = "fp")]
    FloatingPoint,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Morris => "morris",
            Family::QAry => "qary",
            Family::FloatingPoint => "fp",
        })
    }
}

/// A counter family together with its resolution parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CounterParams {
    Morris,
    /// `q = 2^(1/r)`.
    QAry {
        r: u32,
    },
    /// `d` significand bits, `M = 2^d`.
    FloatingPoint {
        d: u32,
    },
}

impl CounterParams {
    pub fn morris() -> Self {
        CounterParams::Morris
    }

    pub fn qary(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParams("q-ary counters need r >= 1".into()));
        }
        Ok(CounterParams::QAry { r })
    }

    pub fn floating_point(d: u32) -> Result<Self> {
        if d > MAX_SIGNIFICAND_BITS {
            return Err(Error::InvalidParams(format!(
                "significand width d = {d} exceeds {MAX_SIGNIFICAND_BITS}"
            )));
        }
        Ok(CounterParams::FloatingPoint { d })
    }

    pub fn family(&self) -> Family {
        match self {
            CounterParams::Morris => Family::Morris,
            CounterParams::QAry { .. } => Family::QAry,
            CounterParams::FloatingPoint { .. } => Family::FloatingPoint,
        }
    }

    /// Number of significand bits if the chain has power-of-two transition
    /// probabilities. Morris is the floating-point chain with `d = 0`.
    pub fn dyadic_bits(&self) -> Option<u32> {
        match *self {
            CounterParams::Morris => Some(0),
            CounterParams::FloatingPoint { d } => Some(d),
            CounterParams::QAry { .. } => None,
        }
    }

    /// `M = 2^d` for floating-point counters.
    pub fn significand_size(&self) -> Option<u64> {
        match *self {
            CounterParams::FloatingPoint { d } => Some(1u64 << d),
            _ => None,
        }
    }

    /// The base `q` of a q-ary chain (2 for Morris).
    pub fn base(&self) -> Option<f64> {
        match *self {
            CounterParams::Morris => Some(2.0),
            CounterParams::QAry { r } => Some((1.0 / r as f64).exp2()),
            CounterParams::FloatingPoint { .. } => None,
        }
    }

    /// Short parameter label used in reports: `d=4`, `r=16`, or `-`.
    pub fn label(&self) -> String {
        match *self {
            CounterParams::Morris => "-".to_string(),
            CounterParams::QAry { r } => format!("r={r}"),
            CounterParams::FloatingPoint { d } => format!("d={d}"),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.dyadic_bits().is_some()
    }
}

impl fmt::Display for CounterParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterParams::Morris => f.write_str("morris"),
            _ => write!(f, "{} {}", self.family(), self.label()),
        }
    }
}

/// A transition probability `q_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransitionProb {
    /// Exactly `2^-t`.
    PowHalf(u64),
    /// Irrational probability rounded to double precision.
    Inexact(f64),
}

impl TransitionProb {
    pub fn to_f64(self) -> f64 {
        match self {
            TransitionProb::PowHalf(t) => {
                if t > 1100 {
                    0.0
                } else {
                    (-(t as f64)).exp2()
                }
            }
            TransitionProb::Inexact(p) => p,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, TransitionProb::PowHalf(_))
    }

    pub fn to_rational(self) -> Option<BigRational> {
        match self {
            TransitionProb::PowHalf(t) => Some(BigRational::new(
                BigInt::one(),
                BigInt::one() << usize::try_from(t).ok()?,
            )),
            TransitionProb::Inexact(_) => None,
        }
    }
}

/// Splits a floating-point state into exponent and significand.
#[inline]
pub(crate) fn split_state(k: u64, d: u32) -> (u64, u64) {
    (k >> d, k & ((1u64 << d) - 1))
}

pub fn transition_prob(params: CounterParams, k: u64) -> TransitionProb {
    match params {
        CounterParams::QAry { r } => TransitionProb::Inexact((-(k as f64) / r as f64).exp2()),
        _ => {
            let d = params.dyadic_bits().unwrap_or(0);
            TransitionProb::PowHalf(k >> d)
        }
    }
}

fn overflow_check(value: f64, what: &'static str, k: u64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow { what, k })
    }
}

/// `2^t` as a double, or infinity past the exponent range.
fn pow2(t: u64) -> f64 {
    if t > 1100 {
        f64::INFINITY
    } else {
        2f64.powi(t as i32)
    }
}

/// Unbiased estimate `f(k)` of the number of updates.
pub fn estimate(params: CounterParams, k: u64) -> Result<f64> {
    let value = match params {
        CounterParams::QAry { r } => {
            let step = std::f64::consts::LN_2 / r as f64;
            (k as f64 * step).exp_m1() / step.exp_m1()
        }
        _ => {
            // (M + u) 2^t - M, written as M (2^t - 1) + u 2^t
            let d = params.dyadic_bits().unwrap_or(0);
            let (t, u) = split_state(k, d);
            let m = (1u64 << d) as f64;
            let scale = pow2(t);
            m * (scale - 1.0) + u as f64 * scale
        }
    };
    overflow_check(value, "estimate", k)
}

/// Variance function `g(k)`, an unbiased estimate of `Var f(X_n)` given `X_n = k`.
pub fn variance_fn(params: CounterParams, k: u64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let value = match params {
        CounterParams::QAry { r } => {
            // g = f (q^k - q) / (q + 1)
            let step = std::f64::consts::LN_2 / r as f64;
            let q = step.exp();
            let f = (k as f64 * step).exp_m1() / step.exp_m1();
            f * q * ((k - 1) as f64 * step).exp_m1() / (q + 1.0)
        }
        _ => {
            // (M/3 + u) 4^t - (M + u) 2^t + 2M/3 factors as
            // (2^t - 1) (M (2^t - 2) / 3 + u 2^t), which has no cancellation.
            let d = params.dyadic_bits().unwrap_or(0);
            let (t, u) = split_state(k, d);
            let m = (1u64 << d) as f64;
            let scale = pow2(t);
            (scale - 1.0) * (m * (scale - 2.0) / 3.0 + u as f64 * scale)
        }
    };
    overflow_check(value, "variance function", k)
}

/// `B_k = sqrt(g(k)) / f(k)`, evaluated in a scaled form that stays finite
/// for any `k >= 1`.
pub fn b_ratio(params: CounterParams, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::UndefinedAtZero("B_k"));
    }
    let squared = match params {
        CounterParams::QAry { r } => {
            let step = std::f64::consts::LN_2 / r as f64;
            let q = step.exp();
            let head = -(-((k - 1) as f64) * step).exp_m1();
            let tail = -(-(k as f64) * step).exp_m1();
            head / tail * (q - 1.0) / (q + 1.0)
        }
        _ => {
            let d = params.dyadic_bits().unwrap_or(0);
            let (t, u) = split_state(k, d);
            let m = (1u64 << d) as f64;
            let s = if t > 1100 { 0.0 } else { (-(t as f64)).exp2() };
            let f_scaled = (m + u as f64) - m * s;
            let g_scaled = (1.0 - s) * (m * (1.0 - 2.0 * s) / 3.0 + u as f64);
            g_scaled / (f_scaled * f_scaled)
        }
    };
    Ok(squared.max(0.0).sqrt())
}

/// Asymptotic bounds on the accuracy `A_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyBounds {
    /// Lower bound on `liminf A_n`.
    pub lower: f64,
    /// Upper bound on `limsup A_n`.
    pub upper: f64,
}

pub fn accuracy_limits(params: CounterParams) -> AccuracyBounds {
    match params {
        CounterParams::FloatingPoint { d } => {
            let m = (1u64 << d) as f64;
            AccuracyBounds {
                lower: (1.0 / (3.0 * m - 1.0)).sqrt(),
                upper: (3.0 / (8.0 * m - 3.0)).sqrt(),
            }
        }
        CounterParams::QAry { r } => {
            let limit = ((std::f64::consts::LN_2 / r as f64).exp_m1() / 2.0).sqrt();
            AccuracyBounds {
                lower: limit,
                upper: limit,
            }
        }
        CounterParams::Morris => {
            let limit = 0.5f64.sqrt();
            AccuracyBounds {
                lower: limit,
                upper: limit,
            }
        }
    }
}

/// Exact `f(k)` for dyadic chains.
pub fn estimate_exact(params: CounterParams, k: u64) -> Result<BigInt> {
    match params {
        CounterParams::Morris => Ok((BigInt::one() << k) - 1),
        CounterParams::FloatingPoint { d } => {
            let (t, u) = split_state(k, d);
            let m = BigInt::from(1u64 << d);
            Ok(((&m + u) << t) - m)
        }
        CounterParams::QAry { .. } => Err(Error::ExactModeUnsupported(Family::QAry)),
    }
}

/// Exact `g(k)` for dyadic chains.
pub fn variance_fn_exact(params: CounterParams, k: u64) -> Result<BigInt> {
    match params {
        CounterParams::Morris => {
            // (4^k - 1)/3 - (2^k - 1)
            let four_k: BigInt = BigInt::one() << (2 * k);
            Ok((four_k - 1) / 3 - ((BigInt::one() << k) - 1))
        }
        CounterParams::FloatingPoint { d } => {
            // ((M + 3u) 4^t + 2M) / 3 - (M + u) 2^t
            let (t, u) = split_state(k, d);
            let m = BigInt::from(1u64 << d);
            let thirds: BigInt = ((&m + 3 * u) << (2 * t)) + 2 * &m;
            Ok(thirds / 3 - ((m + u) << t))
        }
        CounterParams::QAry { .. } => Err(Error::ExactModeUnsupported(Family::QAry)),
    }
}

/// Running sums `(k, f(k), g(k))` built directly from the transition
/// probabilities. For dyadic chains `1/q_k = 2^t` is an integer, so the sums
/// are exact integers.
///
/// This is the generic route for unbiased estimators and is independent of
/// the closed forms in [`estimate_exact`] and [`variance_fn_exact`].
#[derive(Debug, Clone)]
pub struct ExactSums {
    params: CounterParams,
    k: u64,
    f: BigInt,
    g: BigInt,
}

impl ExactSums {
    pub fn new(params: CounterParams) -> Result<Self> {
        if !params.is_exact() {
            return Err(Error::ExactModeUnsupported(params.family()));
        }
        Ok(ExactSums {
            params,
            k: 0,
            f: BigInt::zero(),
            g: BigInt::zero(),
        })
    }
}

impl Iterator for ExactSums {
    type Item = (u64, BigInt, BigInt);

    fn next(&mut self) -> Option<Self::Item> {
        let item = (self.k, self.f.clone(), self.g.clone());
        let TransitionProb::PowHalf(t) = transition_prob(self.params, self.k) else {
            return None;
        };
        let t = usize::try_from(t).ok()?;
        // 1/q = 2^t and (1 - q)/q^2 = 4^t - 2^t
        let inv = BigInt::one() << t;
        self.g += (&inv << t) - &inv;
        self.f += inv;
        self.k += 1;
        Some(item)
    }
}
