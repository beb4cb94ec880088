//! Monte Carlo trajectories and replicate statistics.
//!
//! Replicate `i` of an ensemble seeded with `s` draws its bits from
//! `BitSource::new(child_seed(s, i))`. Replicates run in parallel but are
//! folded in index order, so reports do not depend on the thread schedule.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain_core::{self, CounterParams};
use crate::counters::Counter;
use crate::error::{Error, Result};
use crate::randbits::{child_seed, BitSource, RandomBits};

/// Counter state and relative error after `n` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub k: u64,
    pub estimate: f64,
    /// `(estimate - n) / n`
    pub rel_error: f64,
}

/// Powers of two up to `n_max`, plus `n_max` itself.
pub fn log_checkpoints(n_max: u64) -> Vec<u64> {
    let mut points: Vec<u64> = (0..64)
        .map(|j| 1u64 << j)
        .take_while(|&n| n <= n_max)
        .collect();
    if n_max >= 1 && points.last() != Some(&n_max) {
        points.push(n_max);
    }
    points
}

/// `count` evenly spaced checkpoints ending at `n_max`.
pub fn linear_checkpoints(n_max: u64, count: u64) -> Vec<u64> {
    let mut points: Vec<u64> = (1..=count)
        .map(|j| ((n_max as u128 * j as u128) / count as u128) as u64)
        .filter(|&n| n >= 1)
        .collect();
    points.dedup();
    points
}

/// Checkpoints must be strictly increasing and lie in `1..=n_max`.
pub fn validate_checkpoints(checkpoints: &[u64], n_max: u64) -> Result<()> {
    if let Some(&first) = checkpoints.first() {
        if first == 0 {
            return Err(Error::Checkpoints("checkpoints start at n = 1".into()));
        }
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Checkpoints(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    if let Some(&last) = checkpoints.last() {
        if last > n_max {
            return Err(Error::Checkpoints(format!(
                "checkpoint {last} exceeds n_max = {n_max}"
            )));
        }
    }
    Ok(())
}

/// One simulated run; also returns the bits consumed by each checkpoint.
fn simulate(
    params: CounterParams,
    n_max: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<Vec<(TrajectoryPoint, u64)>> {
    validate_checkpoints(checkpoints, n_max)?;
    let mut counter = Counter::with_max_state(u64::MAX);
    let mut src = BitSource::new(seed);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut n = 0u64;
    for &target in checkpoints {
        while n < target {
            counter.increment(params, &mut src)?;
            n += 1;
        }
        let k = counter.state();
        let estimate = chain_core::estimate(params, k)?;
        out.push((
            TrajectoryPoint {
                n,
                k,
                estimate,
                rel_error: (estimate - n as f64) / n as f64,
            },
            src.position(),
        ));
    }
    Ok(out)
}

/// Simulates one counter for up to `n_max` updates, recording the state at
/// each checkpoint. Only updates up to the last checkpoint are performed.
pub fn run_trajectory(
    params: CounterParams,
    n_max: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<Vec<TrajectoryPoint>> {
    Ok(simulate(params, n_max, seed, checkpoints)?
        .into_iter()
        .map(|(point, _)| point)
        .collect())
}

/// Replicate statistics at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointStats {
    pub n: u64,
    replicates: u64,
    mean: f64,
    // sum of squared deviations from the mean
    m2: f64,
    bits_total: u128,
    estimates: Vec<f64>,
}

impl CheckpointStats {
    fn empty(n: u64) -> Self {
        CheckpointStats {
            n,
            replicates: 0,
            mean: 0.0,
            m2: 0.0,
            bits_total: 0,
            estimates: Vec::new(),
        }
    }

    fn push(&mut self, estimate: f64, bits: u64) {
        self.replicates += 1;
        let delta = estimate - self.mean;
        self.mean += delta / self.replicates as f64;
        self.m2 += delta * (estimate - self.mean);
        self.bits_total += bits as u128;
        self.estimates.push(estimate);
    }

    fn merge(&self, other: &CheckpointStats) -> CheckpointStats {
        if self.replicates == 0 {
            return other.clone();
        }
        if other.replicates == 0 {
            return self.clone();
        }
        let (na, nb) = (self.replicates as f64, other.replicates as f64);
        let total = na + nb;
        let delta = other.mean - self.mean;
        let mut estimates = self.estimates.clone();
        estimates.extend_from_slice(&other.estimates);
        CheckpointStats {
            n: self.n,
            replicates: self.replicates + other.replicates,
            mean: self.mean + delta * nb / total,
            m2: self.m2 + other.m2 + delta * delta * na * nb / total,
            bits_total: self.bits_total + other.bits_total,
            estimates,
        }
    }

    pub fn replicates(&self) -> u64 {
        self.replicates
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; NaN with fewer than two replicates.
    pub fn sample_variance(&self) -> f64 {
        if self.replicates < 2 {
            f64::NAN
        } else {
            self.m2 / (self.replicates - 1) as f64
        }
    }

    pub fn sample_std(&self) -> f64 {
        self.sample_variance().sqrt()
    }

    /// Replicates farther than two sample standard deviations from the
    /// sample mean.
    pub fn outliers(&self) -> usize {
        let band = 2.0 * self.sample_std();
        self.estimates
            .iter()
            .filter(|&&x| (x - self.mean).abs() > band)
            .count()
    }

    /// Mean number of random bits consumed to reach this checkpoint.
    pub fn mean_bits(&self) -> f64 {
        if self.replicates == 0 {
            0.0
        } else {
            self.bits_total as f64 / self.replicates as f64
        }
    }

    /// Final estimates, one per replicate.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }
}

/// Statistics over a set of replicate runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    params: CounterParams,
    checkpoints: Vec<CheckpointStats>,
}

impl EnsembleReport {
    /// A report over zero replicates; the identity for [`merge_reports`].
    pub fn empty(params: CounterParams, checkpoints: &[u64]) -> Self {
        EnsembleReport {
            params,
            checkpoints: checkpoints
                .iter()
                .map(|&n| CheckpointStats::empty(n))
                .collect(),
        }
    }

    pub fn params(&self) -> CounterParams {
        self.params
    }

    pub fn checkpoints(&self) -> &[CheckpointStats] {
        &self.checkpoints
    }

    pub fn at(&self, n: u64) -> Option<&CheckpointStats> {
        self.checkpoints.iter().find(|c| c.n == n)
    }

    pub fn replicates(&self) -> u64 {
        self.checkpoints.first().map_or(0, |c| c.replicates)
    }
}

/// Runs replicates `range` of the ensemble seeded with `seed`.
pub fn run_replicates(
    params: CounterParams,
    n_max: u64,
    seed: u64,
    range: Range<u64>,
    checkpoints: &[u64],
) -> Result<EnsembleReport> {
    validate_checkpoints(checkpoints, n_max)?;
    let runs: Vec<Vec<(TrajectoryPoint, u64)>> = range
        .into_par_iter()
        .map(|i| simulate(params, n_max, child_seed(seed, i), checkpoints))
        .collect::<Result<_>>()?;
    let mut report = EnsembleReport::empty(params, checkpoints);
    for run in &runs {
        for (stats, (point, bits)) in report.checkpoints.iter_mut().zip(run) {
            stats.push(point.estimate, *bits);
        }
    }
    Ok(report)
}

/// Runs `replicates` independent trajectories and aggregates them.
pub fn run_ensemble(
    params: CounterParams,
    n_max: u64,
    replicates: usize,
    seed: u64,
    checkpoints: &[u64],
) -> Result<EnsembleReport> {
    if replicates < 2 {
        return Err(Error::TooFewReplicates(replicates));
    }
    run_replicates(params, n_max, seed, 0..replicates as u64, checkpoints)
}

/// Statistics over the union of two disjoint replicate sets.
pub fn merge_reports(a: &EnsembleReport, b: &EnsembleReport) -> Result<EnsembleReport> {
    if a.params != b.params {
        return Err(Error::ReportMismatch(format!(
            "counter parameters differ ({} vs {})",
            a.params, b.params
        )));
    }
    let same_points = a.checkpoints.len() == b.checkpoints.len()
        && a.checkpoints
            .iter()
            .zip(&b.checkpoints)
            .all(|(x, y)| x.n == y.n);
    if !same_points {
        return Err(Error::ReportMismatch("checkpoints differ".into()));
    }
    Ok(EnsembleReport {
        params: a.params,
        checkpoints: a
            .checkpoints
            .iter()
            .zip(&b.checkpoints)
            .map(|(x, y)| x.merge(y))
            .collect(),
    })
}
