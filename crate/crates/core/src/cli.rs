//! Command-line front end.
//!
//! Every command writes one table to standard output, as CSV (default) or as
//! a JSON array of objects with the same fields. Column sets:
//!
//! | command      | columns |
//! |--------------|---------|
//! | `trajectory` | family,param,seed,n,k,estimate,rel_error |
//! | `ensemble`   | family,param,n,replicates,mean,sample_std,oracle_std,outliers_2sigma,mean_bits |
//! | `oracle`     | family,param,n,mean,variance,accuracy |
//! | `bounds`     | family,param,lower,upper |
//! | `bits`       | family,param,n,expected_bits,paper_expression |
//! | `estimate`   | family,param,k,estimate,variance_fn |
//! | `table-demo` | family,param,width,slot,true_count,state,estimate,lower_bound |
//!
//! Exit codes: 0 on success, 2 for usage errors, 3 for numeric failures.

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, ValueEnum};
use serde::Serialize;

use crate::chain_core::{self, CounterParams, Family};
use crate::counter_table::CounterTable;
use crate::ensemble::{self, linear_checkpoints, log_checkpoints, validate_checkpoints};
use crate::error::{Error, Result};
use crate::oracle::{self, Mode, StepDistribution};
use crate::randbits::{child_seed, BitSource};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const LINEAR_POINTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Relative error of individual simulated counters.
    Trajectory,
    /// Replicate statistics against the oracle.
    Ensemble,
    /// Exact or float moments of the n-step distribution.
    Oracle,
    /// Asymptotic accuracy bounds.
    Bounds,
    /// Expected random-bit cost per update.
    Bits,
    /// Estimate and variance function of a single state.
    Estimate,
    /// A packed table of counters fed a Zipf-shaped workload.
    TableDemo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CounterKind {
    Fp,
    Qary,
    Morris,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckpointSpec {
    /// Powers of two plus `n`.
    Log,
    /// Ten evenly spaced points ending at `n`.
    Linear,
    List(Vec<u64>),
}

#[derive(Debug, Parser)]
#[command(
    name = "fpcounter",
    version,
    about = "Approximate counters: simulation, exact oracle and bounds"
)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long, value_enum)]
    counter: CounterKind,
    /// Significand bits of a floating-point counter.
    #[arg(long)]
    d: Option<u32>,
    /// q-ary resolution, q = 2^(1/r).
    #[arg(long)]
    r: Option<u32>,
    /// Number of updates.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `log`, `linear`, or a comma-separated list of update counts.
    #[arg(long, default_value = "log")]
    checkpoints: String,
    #[arg(long, value_enum, default_value = "float")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputFormat,
    /// Counter state for `estimate`.
    #[arg(long)]
    k: Option<u64>,
    /// Slots in the `table-demo` table.
    #[arg(long, default_value_t = 1000)]
    slots: usize,
    /// Bits per slot in the `table-demo` table.
    #[arg(long, default_value_t = 8)]
    width: u32,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: CounterParams,
    pub n: Option<u64>,
    pub replicates: usize,
    pub seed: u64,
    pub checkpoints: CheckpointSpec,
    pub mode: Mode,
    pub output: OutputFormat,
    pub k: Option<u64>,
    pub slots: usize,
    pub width: u32,
}

impl RunConfig {
    /// Resolved checkpoint list for `n` updates.
    pub fn checkpoint_list(&self, n: u64) -> Vec<u64> {
        match &self.checkpoints {
            CheckpointSpec::Log => log_checkpoints(n),
            CheckpointSpec::Linear => linear_checkpoints(n, LINEAR_POINTS),
            CheckpointSpec::List(points) => points.clone(),
        }
    }
}

fn usage(message: impl std::fmt::Display) -> clap::Error {
    Args::command().error(ErrorKind::ArgumentConflict, message)
}

fn parse_checkpoints(text: &str) -> std::result::Result<CheckpointSpec, clap::Error> {
    match text {
        "log" => Ok(CheckpointSpec::Log),
        "linear" => Ok(CheckpointSpec::Linear),
        list => list
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(CheckpointSpec::List)
            .map_err(|_| usage(format!("invalid --checkpoints value '{list}'"))),
    }
}

/// Parses and validates command-line arguments (without the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(
        std::iter::once(OsString::from("fpcounter")).chain(argv.into_iter().map(Into::into)),
    )?;

    let params = match (args.counter, args.d, args.r) {
        (CounterKind::Fp, Some(d), None) => CounterParams::floating_point(d).map_err(usage)?,
        (CounterKind::Qary, None, Some(r)) => CounterParams::qary(r).map_err(usage)?,
        (CounterKind::Morris, None, None) => CounterParams::Morris,
        (CounterKind::Fp, None, _) => return Err(usage("--counter fp requires --d")),
        (CounterKind::Qary, _, None) => return Err(usage("--counter qary requires --r")),
        (kind, _, _) => {
            return Err(usage(format!(
                "conflicting parameters for --counter {}",
                kind.to_possible_value().unwrap().get_name()
            )))
        }
    };

    let mode = match args.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Float => Mode::Float,
    };
    let checkpoints = parse_checkpoints(&args.checkpoints)?;

    let needs_n = matches!(
        args.command,
        Command::Trajectory
            | Command::Ensemble
            | Command::Oracle
            | Command::Bits
            | Command::TableDemo
    );
    if needs_n {
        match args.n {
            None => return Err(usage("this command requires --n")),
            Some(0) => return Err(usage("--n must be at least 1")),
            Some(n) => {
                if let CheckpointSpec::List(points) = &checkpoints {
                    validate_checkpoints(points, n).map_err(usage)?;
                }
            }
        }
    }

    if mode == Mode::Exact && !params.is_exact() {
        return Err(usage(format!(
            "--mode exact is not available for --counter {}",
            params.family()
        )));
    }

    let replicates = match args.command {
        Command::Ensemble => {
            let replicates = args.replicates.unwrap_or(1000);
            if replicates < 2 {
                return Err(usage("ensemble needs --replicates >= 2"));
            }
            replicates
        }
        _ => {
            let replicates = args.replicates.unwrap_or(1);
            if replicates == 0 {
                return Err(usage("--replicates must be positive"));
            }
            replicates
        }
    };

    match args.command {
        Command::Bits | Command::TableDemo if params.family() == Family::QAry => {
            return Err(usage(
                "this command needs a bit-loop counter (fp or morris)",
            ));
        }
        Command::Estimate if args.k.is_none() => {
            return Err(usage("estimate requires --k"));
        }
        Command::TableDemo => {
            let d = params.dyadic_bits().unwrap_or(0);
            CounterTable::new(args.slots, d, args.width).map_err(usage)?;
        }
        _ => {}
    }

    Ok(RunConfig {
        command: args.command,
        params,
        n: args.n,
        replicates,
        seed: args.seed,
        checkpoints,
        mode,
        output: args.output,
        k: args.k,
        slots: args.slots,
        width: args.width,
    })
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    family: Family,
    param: String,
    seed: u64,
    n: u64,
    k: u64,
    estimate: f64,
    rel_error: f64,
}

#[derive(Debug, Serialize)]
struct EnsembleRow {
    family: Family,
    param: String,
    n: u64,
    replicates: u64,
    mean: f64,
    sample_std: f64,
    oracle_std: f64,
    outliers_2sigma: usize,
    mean_bits: f64,
}

#[derive(Debug, Serialize)]
struct OracleRow {
    family: Family,
    param: String,
    n: u64,
    mean: f64,
    variance: f64,
    accuracy: f64,
}

#[derive(Debug, Serialize)]
struct BoundsRow {
    family: Family,
    param: String,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Serialize)]
struct BitsRow {
    family: Family,
    param: String,
    n: u64,
    expected_bits: f64,
    paper_expression: f64,
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    family: Family,
    param: String,
    k: u64,
    estimate: f64,
    variance_fn: f64,
}

#[derive(Debug, Serialize)]
struct TableRow {
    family: Family,
    param: String,
    width: u32,
    slot: usize,
    true_count: u64,
    state: u64,
    estimate: f64,
    lower_bound: bool,
}

fn emit<W: Write, R: Serialize>(out: &mut W, format: OutputFormat, rows: &[R]) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            for row in rows {
                writer.serialize(row).map_err(|e| Error::Io(e.into()))?;
            }
            writer.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer(&mut *out, rows).map_err(|e| Error::Io(e.into()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Runs a validated command, writing its table to `out`. Nothing is written
/// if the command fails.
pub fn execute<W: Write>(config: &RunConfig, out: &mut W) -> Result<()> {
    let params = config.params;
    let family = params.family();
    let param = params.label();
    let n = config.n.unwrap_or(0);
    match config.command {
        Command::Trajectory => {
            let checkpoints = config.checkpoint_list(n);
            let mut rows = Vec::new();
            for i in 0..config.replicates as u64 {
                let seed = child_seed(config.seed, i);
                for point in ensemble::run_trajectory(params, n, seed, &checkpoints)? {
                    rows.push(TrajectoryRow {
                        family,
                        param: param.clone(),
                        seed,
                        n: point.n,
                        k: point.k,
                        estimate: point.estimate,
                        rel_error: point.rel_error,
                    });
                }
            }
            emit(out, config.output, &rows)
        }
        Command::Ensemble => {
            let checkpoints = config.checkpoint_list(n);
            let report =
                ensemble::run_ensemble(params, n, config.replicates, config.seed, &checkpoints)?;
            let oracle_std = oracle::std_profile(params, &checkpoints)?;
            let rows: Vec<EnsembleRow> = report
                .checkpoints()
                .iter()
                .zip(oracle_std)
                .map(|(stats, oracle_std)| EnsembleRow {
                    family,
                    param: param.clone(),
                    n: stats.n,
                    replicates: stats.replicates(),
                    mean: stats.mean(),
                    sample_std: stats.sample_std(),
                    oracle_std,
                    outliers_2sigma: stats.outliers(),
                    mean_bits: stats.mean_bits(),
                })
                .collect();
            emit(out, config.output, &rows)
        }
        Command::Oracle => {
            let mut dist = StepDistribution::initial(params, config.mode)?;
            let mut rows = Vec::new();
            for point in config.checkpoint_list(n) {
                dist.advance_to(point);
                rows.push(OracleRow {
                    family,
                    param: param.clone(),
                    n: point,
                    mean: dist.expected_estimate()?,
                    variance: dist.estimator_variance()?,
                    accuracy: dist.accuracy()?,
                });
            }
            emit(out, config.output, &rows)
        }
        Command::Bounds => {
            let bounds = chain_core::accuracy_limits(params);
            emit(
                out,
                config.output,
                &[BoundsRow {
                    family,
                    param,
                    lower: bounds.lower,
                    upper: bounds.upper,
                }],
            )
        }
        Command::Bits => {
            let mut dist = StepDistribution::initial(params, config.mode)?;
            let mut rows = Vec::new();
            for point in config.checkpoint_list(n) {
                dist.advance_to(point);
                let cost = dist.expected_bits()?;
                rows.push(BitsRow {
                    family,
                    param: param.clone(),
                    n: point,
                    expected_bits: cost.expected_bits,
                    paper_expression: cost.quoted_expression,
                });
            }
            emit(out, config.output, &rows)
        }
        Command::Estimate => {
            let k = config.k.unwrap_or(0);
            emit(
                out,
                config.output,
                &[EstimateRow {
                    family,
                    param,
                    k,
                    estimate: chain_core::estimate(params, k)?,
                    variance_fn: chain_core::variance_fn(params, k)?,
                }],
            )
        }
        Command::TableDemo => {
            let d = params.dyadic_bits().unwrap_or(0);
            let mut table = CounterTable::new(config.slots, d, config.width)?;
            let mut src = BitSource::new(config.seed);
            let mut rows = Vec::with_capacity(config.slots);
            for slot in 0..config.slots {
                let true_count = (n / (slot as u64 + 1)).max(1);
                for _ in 0..true_count {
                    table.increment(slot, &mut src)?;
                }
                let est = table.estimate(slot)?;
                rows.push(TableRow {
                    family,
                    param: param.clone(),
                    width: config.width,
                    slot,
                    true_count,
                    state: table.get(slot)?,
                    estimate: est.value,
                    lower_bound: est.lower_bound,
                });
            }
            emit(out, config.output, &rows)
        }
    }
}

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 1,
        Error::Overflow { .. } | Error::UndefinedAtZero(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}
