//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p fpcounter --test acceptance -- --nocapture` to see them.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use fpcounter::chain_core::{self, estimate_exact, variance_fn_exact, ExactSums};
use fpcounter::ensemble::{run_ensemble, run_trajectory};
use fpcounter::oracle::{self, per_call_bits, quoted_per_call_bits, Mode, StepDistribution};
use fpcounter::randbits::{child_seed, BitSource, RandomBits, ScriptedBits};
use fpcounter::{CounterParams, CounterTable};

const SEED: u64 = 1;

fn fp(d: u32) -> CounterParams {
    CounterParams::floating_point(d).unwrap()
}

fn qary(r: u32) -> CounterParams {
    CounterParams::qary(r).unwrap()
}

fn verdict(id: u32, title: &str, ok: bool, detail: String, elapsed: Duration) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] criterion {id:>2}: {title} ({detail}; {:.2?})",
        elapsed
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn exact_sweep_params() -> Vec<CounterParams> {
    let mut params = vec![CounterParams::Morris];
    params.extend([0, 1, 2, 4, 6].map(fp));
    params
}

#[test]
fn c01_exact_unbiasedness() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    for params in exact_sweep_params() {
        let mut dist = StepDistribution::initial(params, Mode::Exact).unwrap();
        for n in 0..=256u64 {
            dist.advance_to(n);
            let mean = dist.exact_expected_estimate().unwrap();
            if mean != BigRational::from_integer(BigInt::from(n)) {
                failures.push(format!("{params} n={n}"));
            }
            if dist.exact_total().unwrap() != BigRational::one() {
                failures.push(format!("{params} n={n} not normalized"));
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(10);
    verdict(
        1,
        "E f(X_n) = n exactly, morris + fp d in {0,1,2,4,6}, n <= 256",
        ok,
        format!("{checked} (family, n) pairs, failures {failures:?}"),
        elapsed,
    );
}

#[test]
fn c02_exact_variance_identity() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for params in exact_sweep_params() {
        let mut dist = StepDistribution::initial(params, Mode::Exact).unwrap();
        for n in 0..=256u64 {
            dist.advance_to(n);
            let var = dist.exact_estimator_variance().unwrap();
            let eg = dist.exact_expected_variance_fn().unwrap();
            if var != eg {
                failures.push(format!("{params} n={n}"));
            }
        }
    }
    let pin = |n: u64| {
        let d = oracle::step_distribution(CounterParams::Morris, n, Mode::Exact).unwrap();
        d.exact_estimator_variance().unwrap()
    };
    let pinned_ok = pin(2) == BigRational::from_integer(1.into())
        && pin(3) == BigRational::from_integer(3.into());
    let elapsed = start.elapsed();
    verdict(
        2,
        "Var f(X_n) = E g(X_n) exactly on the same sweep",
        failures.is_empty() && pinned_ok && elapsed < Duration::from_secs(10),
        format!("failures {failures:?}, morris n=2 -> 1 and n=3 -> 3: {pinned_ok}"),
        elapsed,
    );
}

#[test]
fn c03_closed_forms_match_sums() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for d in 0..=8 {
        let params = fp(d);
        for (k, f_sum, g_sum) in ExactSums::new(params).unwrap().take(10_001) {
            let f = estimate_exact(params, k).unwrap();
            let g = variance_fn_exact(params, k).unwrap();
            if f != f_sum || g != g_sum {
                failures.push((d, k));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        "closed-form f and g equal the running sums, d in 0..=8, k <= 10^4",
        failures.is_empty() && elapsed < Duration::from_secs(5),
        format!("mismatches {:?}", &failures[..failures.len().min(5)]),
        elapsed,
    );
}

#[test]
fn c04_fp_accuracy_window() {
    let start = Instant::now();
    let lo = (1.0f64 / 47.0).sqrt() - 0.005;
    let hi = (3.0f64 / 125.0).sqrt() + 0.005;
    let mut dist = StepDistribution::initial(fp(4), Mode::Float).unwrap();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut outside = Vec::new();
    for n in (1u64 << 10)..=(1 << 17) {
        dist.advance_to(n);
        let a = dist.accuracy().unwrap();
        min = min.min(a);
        max = max.max(a);
        if !(lo..=hi).contains(&a) {
            outside.push(n);
        }
    }
    let elapsed = start.elapsed();
    let ok = outside.is_empty() && max - min >= 0.002 && elapsed < Duration::from_secs(30);
    verdict(
        4,
        "fp d=4 accuracy in [0.1409, 0.1599] for n in 2^10..=2^17, with fluctuation",
        ok,
        format!(
            "A_n range [{min:.5}, {max:.5}], spread {:.5}, {} outside",
            max - min,
            outside.len()
        ),
        elapsed,
    );
}

#[test]
fn c05_qary_limit() {
    let start = Instant::now();
    let dist = oracle::step_distribution(qary(16), 100_000, Mode::Float).unwrap();
    let a = dist.accuracy().unwrap();
    let limit = ((1.0f64 / 16.0).exp2() - 1.0) / 2.0;
    let rel = (a * a - limit).abs() / limit;
    let elapsed = start.elapsed();
    verdict(
        5,
        "q-ary r=16: A^2 at n=10^5 within 1% of (q-1)/2",
        rel <= 0.01 && elapsed < Duration::from_secs(60),
        format!("A^2 = {:.6}, limit {:.6}, rel diff {rel:.4}", a * a, limit),
        elapsed,
    );
}

#[test]
fn c06_ensemble_reproduces_replicate_statistics() {
    let start = Instant::now();
    let n = 100_000u64;
    let mut details = Vec::new();
    let mut ok = true;
    for params in [fp(4), qary(16)] {
        let report = run_ensemble(params, n, 1000, SEED, &[n]).unwrap();
        let stats = report.at(n).unwrap();
        let oracle_std = oracle::std_profile(params, &[n]).unwrap()[0];
        let mean_ok = (stats.mean() - n as f64).abs() <= 4.0 * oracle_std / 1000f64.sqrt();
        let std_ratio = stats.sample_std() / oracle_std;
        let std_ok = (0.85..=1.15).contains(&std_ratio);
        let outlier_frac = stats.outliers() as f64 / 1000.0;
        let outliers_ok = outlier_frac <= 0.10;
        ok &= mean_ok && std_ok && outliers_ok;
        details.push(format!(
            "{params}: mean {:.1} (ok {mean_ok}), std/oracle {std_ratio:.4}, outliers {:.3}",
            stats.mean(),
            outlier_frac
        ));
    }
    let elapsed = start.elapsed();
    verdict(
        6,
        "ensemble fp d=4 and qary r=16, n=10^5, 1000 replicates",
        ok && elapsed < Duration::from_secs(120),
        details.join("; "),
        elapsed,
    );
}

#[test]
fn c07_trajectory_band() {
    let start = Instant::now();
    let n = 100_000u64;
    let band = 2.0 * 0.59 * 0.25;
    let inside = (0..100)
        .filter(|&i| {
            let point = run_trajectory(fp(4), n, child_seed(SEED, i), &[n]).unwrap()[0];
            point.rel_error.abs() <= band
        })
        .count();
    verdict(
        7,
        "fp d=4: >= 90 of 100 trajectories inside +-2*0.59*2^-2 at n=10^5",
        inside >= 90,
        format!("{inside}/100 inside {band}"),
        start.elapsed(),
    );
}

#[test]
fn c08_bit_cost() {
    let start = Instant::now();
    let calls = 1_000_000u64;
    let mut details = Vec::new();
    let mut ok = true;
    for t in [1u64, 2, 3, 8] {
        let mut src = BitSource::new(SEED + t);
        for _ in 0..calls {
            src.bernoulli_pow2(t);
        }
        let mean = src.position() as f64 / calls as f64;
        let expected = per_call_bits(t);
        let within = (mean - expected).abs() <= 0.01 * expected;
        ok &= within;
        details.push(format!(
            "t={t}: {mean:.4} vs {expected:.4} (quoted {:.4})",
            quoted_per_call_bits(t)
        ));
    }
    for t in 0..=12u32 {
        let successes = (0..(1u64 << t))
            .filter(|&prefix| ScriptedBits::from_word(prefix, t).bernoulli_pow2(t as u64))
            .count();
        ok &= successes == 1;
    }
    details.push("exhaustive prefixes t <= 12: one success each".into());
    verdict(
        8,
        "bits per call within 1% of 2 - 2^(1-t); exact 2^-t by enumeration",
        ok,
        details.join("; "),
        start.elapsed(),
    );
}

#[test]
fn c09_cli_determinism() {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_fpcounter");
    let invocations: &[&[&str]] = &[
        &[
            "trajectory",
            "--counter",
            "fp",
            "--d",
            "4",
            "--n",
            "100000",
            "--replicates",
            "5",
        ],
        &[
            "trajectory",
            "--counter",
            "qary",
            "--r",
            "16",
            "--n",
            "20000",
            "--seed",
            "9",
        ],
        &[
            "ensemble",
            "--counter",
            "fp",
            "--d",
            "4",
            "--n",
            "20000",
            "--replicates",
            "200",
        ],
        &[
            "ensemble",
            "--counter",
            "qary",
            "--r",
            "16",
            "--n",
            "20000",
            "--replicates",
            "200",
            "--output",
            "json",
        ],
        &[
            "oracle",
            "--counter",
            "morris",
            "--n",
            "64",
            "--mode",
            "exact",
        ],
        &["oracle", "--counter", "qary", "--r", "4", "--n", "5000"],
        &["bounds", "--counter", "fp", "--d", "4"],
        &["bits", "--counter", "fp", "--d", "0", "--n", "2"],
        &[
            "table-demo",
            "--counter",
            "fp",
            "--d",
            "4",
            "--n",
            "10000",
            "--slots",
            "300",
        ],
    ];
    let mut mismatched = Vec::new();
    for argv in invocations {
        let run = || Command::new(bin).args(*argv).output().unwrap();
        let (a, b) = (run(), run());
        if !(a.status.success()
            && b.status.success()
            && a.stdout == b.stdout
            && !a.stdout.is_empty())
        {
            mismatched.push(argv.join(" "));
        }
    }
    verdict(
        9,
        "identical CLI invocations produce byte-identical output",
        mismatched.is_empty(),
        format!(
            "{} invocations, mismatched {mismatched:?}",
            invocations.len()
        ),
        start.elapsed(),
    );
}

#[test]
fn c10_packing() {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 256,
        ..Config::default()
    });
    let strategy = (
        prop::sample::select(vec![5u32, 6, 8, 12, 16]),
        prop::collection::vec(any::<u64>(), 1..200),
        any::<u64>(),
    );
    let result = runner.run(&strategy, |(width, raw, seed)| {
        let mut table = CounterTable::new(raw.len(), 4.min(width - 1), width).unwrap();
        let values: Vec<u64> = raw.iter().map(|v| v & table.max_state()).collect();
        for (i, &v) in values.iter().enumerate() {
            table.set(i, v).unwrap();
        }
        for (i, &v) in values.iter().enumerate() {
            prop_assert_eq!(table.get(i).unwrap(), v);
        }
        // neighbor isolation under increments
        let mut src = BitSource::new(seed);
        let mut expected = values.clone();
        for step in 0..(4 * values.len()) {
            let i = (seed as usize).wrapping_add(step * 7) % values.len();
            let before = table.get(i).unwrap();
            table.increment(i, &mut src).unwrap();
            expected[i] = table.get(i).unwrap();
            prop_assert!(expected[i] == before || expected[i] == before + 1);
            for j in [i.wrapping_sub(1), i + 1] {
                if j < values.len() {
                    prop_assert_eq!(table.get(j).unwrap(), expected[j]);
                }
            }
        }
        for (i, &v) in expected.iter().enumerate() {
            prop_assert_eq!(table.get(i).unwrap(), v);
        }
        Ok(())
    });
    verdict(
        10,
        "packed table round trip and neighbor isolation, widths {5,6,8,12,16}",
        result.is_ok(),
        format!("{result:?}"),
        start.elapsed(),
    );
}

#[test]
fn pinned_values_from_chain_core() {
    // sanity anchors shared by several criteria
    assert_eq!(chain_core::estimate(fp(2), 5).unwrap(), 6.0);
    assert_eq!(chain_core::variance_fn(fp(2), 5).unwrap(), 2.0);
}
