//! `rcsccc`: constructs, analyzes and simulates the rate-compatible SCCC family.
//!
//! Data goes to the files named by `--out` (and `--manifest`, `--out-dir`);
//! stdout carries a short human-readable summary.
//!
//! `--config FILE` reads a TOML document whose `[<subcommand>]` table holds
//! keys named exactly like that subcommand's flags (`d2 = 100`,
//! `target-pb = 1e-5`, `uncoded = true`); a top-level `threads` key is also
//! accepted. Flags given on the command line take precedence.
//!
//! Exit codes: 0 success, 2 infeasible configuration, 3 numerical
//! non-convergence, 1 any other failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rcsccc::channel::bpsk_limit_db;
use rcsccc::exit::{
    curves_to_csv, ChartCache, ChartKind, Chart, ExitSettings, ThresholdResult,
    DEFAULT_EXIT_BLOCK_LEN, DEFAULT_GRID_POINTS, DEFAULT_SAMPLES, THRESHOLD_CSV_HEADER, ia_grid,
};
use rcsccc::harness::{combined_prediction, run_ber, SimTarget, StopRule};
use rcsccc::optimizer::{
    default_tables, greedy_lower_table, greedy_upper_table, GreedySettings, DEFAULT_REF_SNR_DB,
};
use rcsccc::puncturing::{
    d2_compromise, feasible_d2, length_for_rate, nearest_length, rate_from_dimensions,
    CodeDimensions, RateCompatibleTable, Rational, UPPER_PERIOD, LOWER_PERIOD,
};
use rcsccc::sccc::{CodeFamily, DecodeOptions, InterleaverChoice, Termination};
use rcsccc::wef::{choose_d2_ef_for_length, config_spectrum, ub_required_snr, WefLimits};
use rcsccc::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "rcsccc", version, about = "Rate-compatible SCCC construction, analysis and simulation")]
struct Cli {
    /// TOML file with a [<subcommand>] table of flag values; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Maximum number of worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the dimensions and rate of a family member
    Rate(RateArgs),
    /// Regenerate both puncturing tables with the greedy search
    Tables(TablesArgs),
    /// Estimate EXIT curves at one Eb/N0
    ExitCurve(ExitCurveArgs),
    /// EXIT-predicted Eb/N0 needed to reach a target bit error rate
    Threshold(ThresholdArgs),
    /// Waterfall thresholds over the feasible d2 values of one rate
    WfGrid(WfGridArgs),
    /// Union bound on the bit error probability over an Eb/N0 range
    Bound(BoundArgs),
    /// Union-bound Eb/N0 needed to reach a target over the feasible d2 values
    UbGrid(UbGridArgs),
    /// d2 chosen by the error-floor, waterfall or compromise strategy
    Strategy(StrategyArgs),
    /// Monte Carlo BER/FER simulation
    Simulate(SimulateArgs),
    /// Combined EXIT (waterfall) and union-bound (floor) prediction
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct RateArgs {
    /// Kept upper-parity bits per 100 (0..=100)
    #[arg(long)]
    d1: Option<usize>,
    /// Kept lower-parity bits per 300 (0..=300)
    #[arg(long)]
    d2: Option<usize>,
    /// Upper permeability rate, e.g. 1/5
    #[arg(long)]
    rho1: Option<Rational>,
    /// Lower permeability rate, e.g. 1/15
    #[arg(long)]
    rho2: Option<Rational>,
    /// Overall rate, e.g. 2/3 (prints the feasible d2 interval)
    #[arg(long)]
    rate: Option<String>,
}

/// Selects one member of the family and how it is built.
#[derive(Debug, Args)]
struct CodeArgs {
    /// Kept upper-parity bits per 100
    #[arg(long)]
    d1: Option<usize>,
    /// Kept lower-parity bits per 300
    #[arg(long)]
    d2: Option<usize>,
    /// Overall rate (e.g. 1/2, 0.9); with --d2, fixes d1 = L - 200 - d2
    #[arg(long)]
    rate: Option<String>,
    /// Information bits per frame
    #[arg(long)]
    k: Option<usize>,
    /// Directory holding upper_table.txt and lower_table.txt (default: shipped tables)
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Interleaver family
    #[arg(long, value_enum, default_value_t = InterleaverArg::Random)]
    interleaver: InterleaverArg,
    /// Spread of the S-random interleaver
    #[arg(long, default_value_t = 10)]
    spread: usize,
    /// Seed of the interleaver permutation
    #[arg(long, default_value_t = 1)]
    interleaver_seed: u64,
    /// Upper trellis termination
    #[arg(long, value_enum, default_value_t = TerminationArg::Tail)]
    termination: TerminationArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterleaverArg {
    Random,
    SRandom,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TerminationArg {
    /// Last two information positions drive the upper encoder to state 0
    Tail,
    /// Both encoders are cut off after the last bit
    Truncated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChartArg {
    /// Upper/lower decomposition used by the decoder
    Equivalent,
    /// Classical outer/inner decomposition
    Classical,
}

impl From<ChartArg> for ChartKind {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Equivalent => ChartKind::Equivalent,
            ChartArg::Classical => ChartKind::Classical,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyMode {
    Ef,
    Wf,
    Compromise,
}

/// Settings of the Monte Carlo EXIT estimator.
#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Bits per EXIT point
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Number of a-priori grid points on [0, 1]
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    points: usize,
    /// Master seed of the estimator (fixed so that repeated runs agree)
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Largest information weight enumerated
    #[arg(long, default_value_t = WefLimits::default().w_max)]
    w_max: usize,
    /// Largest transmitted weight enumerated
    #[arg(long, default_value_t = WefLimits::default().h_max)]
    h_max: usize,
    /// Largest interleaver-frame weight enumerated
    #[arg(long, default_value_t = WefLimits::default().l_max)]
    l_max: usize,
}

#[derive(Debug, Args)]
struct SnrRange {
    /// First Eb/N0 in dB
    #[arg(long)]
    snr_min: f64,
    /// Last Eb/N0 in dB
    #[arg(long)]
    snr_max: f64,
    /// Eb/N0 step in dB
    #[arg(long, default_value_t = 0.5)]
    snr_step: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct TablesArgs {
    /// Output directory
    #[arg(long)]
    out_dir: PathBuf,
    /// Reference Eb/N0 of the score in dB
    #[arg(long, default_value_t = DEFAULT_REF_SNR_DB)]
    ref_snr: f64,
    /// Largest information weight enumerated while scoring
    #[arg(long, default_value_t = GreedySettings::default().limits.w_max)]
    w_max: usize,
    /// Largest transmitted weight enumerated while scoring
    #[arg(long, default_value_t = GreedySettings::default().limits.h_max)]
    h_max: usize,
    /// Largest interleaver-frame weight enumerated while scoring
    #[arg(long, default_value_t = GreedySettings::default().limits.l_max)]
    l_max: usize,
    /// Stop after this many greedy steps per table (partial tables)
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ExitCurveArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Eb/N0 in dB
    #[arg(long)]
    snr: f64,
    /// Which decomposition to chart
    #[arg(long, value_enum, default_value_t = ChartArg::Equivalent)]
    chart: ChartArg,
    /// Iterations of the reported trajectory
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// CSV output `ia,ie,component,eb_n0_db,d0,d1,d2`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ThresholdArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Target bit error probability
    #[arg(long, default_value_t = 1e-5)]
    target_pb: f64,
    /// Decoder iterations (lower pass + upper pass each)
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Which decomposition to use
    #[arg(long, value_enum, default_value_t = ChartArg::Equivalent)]
    chart: ChartArg,
    /// CSV output `rate,d2,eb_n0_db_min,target_pb,iters`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct WfGridArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Target bit error probability
    #[arg(long, default_value_t = 1e-5)]
    target_pb: f64,
    /// Decoder iterations
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Spacing of the d2 grid
    #[arg(long, default_value_t = 10)]
    d2_step: usize,
    /// CSV output `rate,d2,eb_n0_db_min,target_pb,iters`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct BoundArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    snr: SnrRange,
    /// Also report the Eb/N0 at which the bound reaches this value
    #[arg(long)]
    target_pb: Option<f64>,
    /// CSV output `eb_n0_db,pb_bound`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct UbGridArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    limits: LimitArgs,
    /// Target bit error probability
    #[arg(long, default_value_t = 1e-9)]
    target_pb: f64,
    /// Spacing of the d2 grid
    #[arg(long, default_value_t = 10)]
    d2_step: usize,
    /// CSV output `rate,d2,eb_n0_db_min,target_pb`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct StrategyArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Strategy
    #[arg(long, value_enum)]
    mode: StrategyMode,
    /// Target bit error probability of the waterfall strategy
    #[arg(long, default_value_t = 1e-5)]
    target_pb: f64,
    /// Decoder iterations of the waterfall strategy
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Spacing of the waterfall d2 grid
    #[arg(long, default_value_t = 10)]
    d2_step: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    snr: SnrRange,
    /// Decoder iterations (lower pass + upper pass each)
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Master seed (recorded in the manifest when omitted)
    #[arg(long)]
    seed: Option<u64>,
    /// Stop a point after this many bit errors
    #[arg(long, default_value_t = StopRule::default().min_bit_errors)]
    min_errors: u64,
    /// Stop a point after this many information bits
    #[arg(long, default_value_t = StopRule::default().max_bits)]
    max_bits: u64,
    /// Stop decoding a frame once decisions are stable for two iterations
    #[arg(long)]
    early_stop: bool,
    /// Simulate uncoded BPSK instead of the code
    #[arg(long)]
    uncoded: bool,
    /// CSV output `eb_n0_db,ber,fer,bits,frames,bit_errors,frame_errors`
    #[arg(long)]
    out: PathBuf,
    /// JSON run manifest
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct PredictArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    snr: SnrRange,
    /// Decoder iterations
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Block length of the frames used for the EXIT curves
    #[arg(long, default_value_t = DEFAULT_EXIT_BLOCK_LEN)]
    exit_k: usize,
    /// CSV output `eb_n0_db,exit_pb,bound_pb,pb,source`
    #[arg(long)]
    out: PathBuf,
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Io(String),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(Error::Infeasible { .. })
            | CliError::Lib(Error::Domain(_))
            | CliError::Lib(Error::Config(_))
            | CliError::Lib(Error::UndefinedRate)
            | CliError::Usage(_) => 2,
            CliError::Lib(Error::NoConvergence(_)) => 3,
            _ => 1,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parses `a/b` or a decimal rate.
fn parse_rate(s: &str) -> CliResult<Rational> {
    if let Ok(r) = s.parse::<Rational>() {
        return Ok(r);
    }
    let x: f64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse rate '{s}'")))?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(CliError::Lib(Error::Domain(format!("rate {x} outside (0, 1]"))));
    }
    Ok(Rational::new(200, nearest_length(x) as i64))
}

/// Total length for a rate; rates without an integral `L` use the nearest one.
fn length_of(rate: &str) -> CliResult<usize> {
    let r = parse_rate(rate)?;
    match length_for_rate(r) {
        Ok(l) => Ok(l),
        Err(_) => {
            let x = *r.numer() as f64 / *r.denom() as f64;
            Ok(nearest_length(x))
        }
    }
}

impl CodeArgs {
    fn dims(&self) -> CliResult<CodeDimensions> {
        match (self.d1, self.d2, &self.rate) {
            (Some(d1), Some(d2), None) => Ok(CodeDimensions::new(d1, d2)?),
            (None, Some(d2), Some(r)) => Ok(CodeDimensions::from_length(length_of(r)?, d2)?),
            (None, None, Some(r)) => {
                let l = length_of(r)?;
                Ok(CodeDimensions::from_length(l, d2_compromise(l)?)?)
            }
            _ => Err(CliError::Usage(
                "give --d1 and --d2, or --rate with an optional --d2".into(),
            )),
        }
    }

    fn length(&self) -> CliResult<usize> {
        match &self.rate {
            Some(r) => length_of(r),
            None => Ok(self.dims()?.length()),
        }
    }

    fn tables(&self) -> CliResult<(RateCompatibleTable, RateCompatibleTable)> {
        match &self.tables {
            None => Ok(default_tables()),
            Some(dir) => {
                let upper = RateCompatibleTable::parse(&read_file(&dir.join("upper_table.txt"))?)?;
                let lower = RateCompatibleTable::parse(&read_file(&dir.join("lower_table.txt"))?)?;
                Ok((upper, lower))
            }
        }
    }

    fn family(&self, default_k: usize) -> CliResult<CodeFamily> {
        let (upper, lower) = self.tables()?;
        let interleaver = match self.interleaver {
            InterleaverArg::Random => InterleaverChoice::Random {
                seed: self.interleaver_seed,
            },
            InterleaverArg::SRandom => InterleaverChoice::SRandom {
                s: self.spread,
                seed: self.interleaver_seed,
            },
        };
        let termination = match self.termination {
            TerminationArg::Tail => Termination::UpperZeroTail,
            TerminationArg::Truncated => Termination::Truncated,
        };
        Ok(CodeFamily::new(upper, lower, self.k.unwrap_or(default_k))?
            .with_interleaver(interleaver)
            .with_termination(termination))
    }
}

impl EstimatorArgs {
    fn settings(&self) -> ExitSettings {
        ExitSettings {
            ia_grid: ia_grid(self.points.max(2)),
            n_samples: self.samples,
            seed: self.seed,
        }
    }
}

impl LimitArgs {
    fn limits(&self) -> CliResult<WefLimits> {
        Ok(WefLimits::new(self.w_max, self.h_max, self.l_max)?)
    }
}

impl SnrRange {
    fn grid(&self) -> CliResult<Vec<f64>> {
        if !(self.snr_step > 0.0) || self.snr_max < self.snr_min {
            return Err(CliError::Usage("need snr-min <= snr-max and snr-step > 0".into()));
        }
        let n = ((self.snr_max - self.snr_min) / self.snr_step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((self.snr_min + i as f64 * self.snr_step) * 1e6).round() / 1e6)
            .collect())
    }
}

/// The given seed, or one derived from the clock (reported to the user).
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        eprintln!("no --seed given; using seed {s}");
        s
    })
}

fn fmt_dims(d: &CodeDimensions) -> String {
    format!(
        "D=[{}, {}, {}] L={} R={} rho0={} rho1={} rho2={}",
        d.d0,
        d.d1,
        d.d2,
        d.length(),
        d.rate(),
        d.rho0(),
        d.rho1(),
        d.rho2()
    )
}

fn cmd_rate(a: &RateArgs) -> CliResult<()> {
    if let Some(r) = &a.rate {
        let l = length_of(r)?;
        let range = feasible_d2(l)?;
        println!(
            "L={l} R={} feasible d2 in [{}, {}] compromise d2={}",
            Rational::new(200, l as i64),
            range.start(),
            range.end(),
            d2_compromise(l)?
        );
        if let Some(d2) = a.d2 {
            println!("{}", fmt_dims(&CodeDimensions::from_length(l, d2)?));
        }
        return Ok(());
    }
    let (d1, d2) = match (a.d1, a.d2, a.rho1, a.rho2) {
        (Some(d1), Some(d2), None, None) => (d1, d2),
        (None, None, Some(r1), Some(r2)) => {
            rate_from_dimensions(Rational::from_integer(1), r1, r2)?;
            let d1 = r1 * Rational::from_integer(UPPER_PERIOD as i64);
            let d2 = r2 * Rational::from_integer(LOWER_PERIOD as i64);
            if !d1.is_integer() || !d2.is_integer() {
                return Err(CliError::Lib(Error::Domain(format!(
                    "rho1 = {r1}, rho2 = {r2} do not give integral d1 = {d1}, d2 = {d2}"
                ))));
            }
            (*d1.numer() as usize, *d2.numer() as usize)
        }
        _ => {
            return Err(CliError::Usage(
                "give --d1 and --d2, --rho1 and --rho2, or --rate".into(),
            ))
        }
    };
    println!("{}", fmt_dims(&CodeDimensions::new(d1, d2)?));
    Ok(())
}

fn cmd_tables(a: &TablesArgs) -> CliResult<()> {
    let settings = GreedySettings {
        limits: WefLimits::new(a.w_max, a.h_max, a.l_max)?,
        ref_snr_db: a.ref_snr,
        max_steps: a.max_steps,
        ..GreedySettings::default()
    };
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", a.out_dir.display())))?;
    let upper = greedy_upper_table(&settings)?;
    let lower = greedy_lower_table(&settings)?;
    let (ut, lt) = (upper.table()?, lower.table()?);
    write_file(&a.out_dir.join("upper_table.txt"), &ut.to_text())?;
    write_file(&a.out_dir.join("lower_table.txt"), &lt.to_text())?;
    write_file(&a.out_dir.join("upper_search_log.json"), &upper.to_json())?;
    write_file(&a.out_dir.join("lower_search_log.json"), &lower.to_json())?;
    // Nested-prefix audit: each prefix punctures a superset of the previous one.
    for t in [&ut, &lt] {
        for n in 1..=t.len() {
            let prev = t.pattern_at(n - 1)?;
            let cur = t.pattern_at(n)?;
            if cur.keep_mask().iter().zip(prev.keep_mask()).any(|(&c, &p)| c && !p) {
                return Err(CliError::Lib(Error::Domain(format!("prefix {n} is not nested"))));
            }
        }
    }
    println!(
        "wrote {} upper and {} lower indices to {} (nested-prefix audit passed)",
        ut.len(),
        lt.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn cmd_exit_curve(a: &ExitCurveArgs) -> CliResult<()> {
    let family = a.code.family(DEFAULT_EXIT_BLOCK_LEN)?;
    let cfg = family.config(a.code.dims()?)?;
    let settings = a.est.settings();
    let chart = match a.chart {
        ChartArg::Equivalent => Chart::equivalent(&cfg, a.snr, &settings)?,
        ChartArg::Classical => Chart::classical(&cfg, a.snr, &settings)?,
    };
    write_file(&a.out, &curves_to_csv(&[&chart.second, &chart.first]))?;
    let t = chart.trajectory(a.iters.max(1))?;
    println!(
        "{} at {} dB ({:?} chart, seed {}): tunnel {}, min gap {:.4}, predicted Pb after {} iterations {:.3e}",
        fmt_dims(&cfg.dims()),
        a.snr,
        a.chart,
        settings.seed,
        if chart.tunnel_open()? { "open" } else { "closed" },
        chart.min_gap()?,
        a.iters,
        t.predicted_pb
    );
    Ok(())
}

fn cmd_threshold(a: &ThresholdArgs) -> CliResult<()> {
    let family = a.code.family(DEFAULT_EXIT_BLOCK_LEN)?;
    let cfg = family.config(a.code.dims()?)?;
    let settings = a.est.settings();
    let cache = ChartCache::new();
    let t = rcsccc::exit::threshold_search_kind(
        &cache,
        a.chart.into(),
        &cfg,
        a.target_pb,
        a.iters,
        &settings,
    )?;
    if let Some(out) = &a.out {
        write_file(out, &format!("{THRESHOLD_CSV_HEADER}\n{}\n", t.csv_row()))?;
    }
    println!(
        "{}: Eb/N0 >= {:.2} dB reaches Pb {:e} in {} iterations (seed {})",
        fmt_dims(&cfg.dims()),
        t.eb_n0_db_min,
        t.target_pb,
        t.n_iterations,
        settings.seed
    );
    Ok(())
}

/// Threshold (or search failure) of each `d2` of a waterfall grid.
type WfRows = Vec<(usize, rcsccc::Result<ThresholdResult>)>;

fn wf_grid_rows(
    code: &CodeArgs,
    est: &EstimatorArgs,
    target_pb: f64,
    iters: usize,
    d2_step: usize,
) -> CliResult<(usize, WfRows)> {
    let family = code.family(DEFAULT_EXIT_BLOCK_LEN)?;
    let l = code.length()?;
    let cache = ChartCache::new();
    let grid = rcsccc::exit::wf_grid(&cache, &family, l, target_pb, iters, d2_step, &est.settings())?;
    Ok((l, grid))
}

fn cmd_wf_grid(a: &WfGridArgs) -> CliResult<()> {
    let (l, grid) = wf_grid_rows(&a.code, &a.est, a.target_pb, a.iters, a.d2_step)?;
    let mut csv = format!("{THRESHOLD_CSV_HEADER}\n");
    for (d2, r) in &grid {
        match r {
            Ok(t) => writeln!(csv, "{}", t.csv_row()).unwrap(),
            Err(_) => writeln!(
                csv,
                "{},{d2},nan,{:e},{}",
                Rational::new(200, l as i64),
                a.target_pb,
                a.iters
            )
            .unwrap(),
        }
    }
    write_file(&a.out, &csv)?;
    let best = rcsccc::exit::choose_d2_wf(&grid)?;
    println!("L={l}: waterfall optimum d2={best}");
    Ok(())
}

fn cmd_bound(a: &BoundArgs) -> CliResult<()> {
    let family = a.code.family(2000)?;
    let cfg = family.config(a.code.dims()?)?;
    let spectrum = config_spectrum(&cfg, a.limits.limits()?)?;
    let curve = spectrum.curve(&a.snr.grid()?);
    write_file(&a.out, &curve.to_csv())?;
    let mut summary = format!("{} K={}", fmt_dims(&cfg.dims()), cfg.k());
    if let Some((d, c)) = spectrum.d_min() {
        write!(summary, ": d_min={d} (coefficient {c:.3e})").unwrap();
    }
    if let Some(target) = a.target_pb {
        write!(summary, ", bound reaches {target:e} at {:.3} dB", ub_required_snr(&spectrum, target)?).unwrap();
    }
    println!("{summary}");
    Ok(())
}

fn cmd_ub_grid(a: &UbGridArgs) -> CliResult<()> {
    let family = a.code.family(2000)?;
    let l = a.code.length()?;
    let range = feasible_d2(l)?;
    let step = a.d2_step.max(1);
    let mut d2s: Vec<usize> = range.clone().step_by(step).collect();
    if d2s.last() != Some(range.end()) {
        d2s.push(*range.end());
    }
    let limits = a.limits.limits()?;
    let mut csv = String::from("rate,d2,eb_n0_db_min,target_pb\n");
    let mut best: Option<(usize, f64)> = None;
    for d2 in d2s {
        let cfg = family.config(CodeDimensions::from_length(l, d2)?)?;
        let snr = ub_required_snr(&config_spectrum(&cfg, limits)?, a.target_pb);
        match snr {
            Ok(s) => {
                writeln!(csv, "{},{d2},{s},{:e}", cfg.dims().rate(), a.target_pb).unwrap();
                if best.is_none_or(|(_, b)| s < b) {
                    best = Some((d2, s));
                }
            }
            Err(_) => writeln!(csv, "{},{d2},nan,{:e}", cfg.dims().rate(), a.target_pb).unwrap(),
        }
    }
    write_file(&a.out, &csv)?;
    match best {
        Some((d2, s)) => println!("L={l}: lowest bound requirement {s:.3} dB at d2={d2}"),
        None => return Err(CliError::Lib(Error::NoConvergence("no d2 reached the target".into()))),
    }
    Ok(())
}

fn cmd_strategy(a: &StrategyArgs) -> CliResult<()> {
    let l = a.code.length()?;
    let d2 = match a.mode {
        StrategyMode::Ef => choose_d2_ef_for_length(l)?,
        StrategyMode::Compromise => d2_compromise(l)?,
        StrategyMode::Wf => {
            let (_, grid) = wf_grid_rows(&a.code, &a.est, a.target_pb, a.iters, a.d2_step)?;
            rcsccc::exit::choose_d2_wf(&grid)?
        }
    };
    let dims = CodeDimensions::from_length(l, d2)?;
    println!("d2={d2} rho2={} {}", dims.rho2(), fmt_dims(&dims));
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed);
    let stop = StopRule {
        min_bit_errors: a.min_errors,
        max_bits: a.max_bits,
    };
    let snrs = a.snr.grid()?;
    let family;
    let cfg;
    let target = if a.uncoded {
        SimTarget::Uncoded {
            frame_len: a.code.k.unwrap_or(2000),
        }
    } else {
        family = a.code.family(2000)?;
        cfg = family.config(a.code.dims()?)?;
        SimTarget::Coded {
            config: &cfg,
            options: DecodeOptions {
                early_stop: a.early_stop,
                ..DecodeOptions::iterations(a.iters)
            },
        }
    };
    let curve = run_ber(&target, &snrs, &stop, seed)?;
    write_file(&a.out, &curve.to_csv())?;
    if let Some(m) = &a.manifest {
        write_file(m, &curve.manifest.to_json())?;
    }
    for p in &curve.points {
        println!(
            "{:>6.2} dB  BER {:.3e}  FER {:.3e}  ({} errors in {} bits)",
            p.eb_n0_db, p.ber, p.fer, p.counts.bit_errors, p.counts.bits
        );
    }
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    let dims = a.code.dims()?;
    let family = a.code.family(2000)?;
    let cfg = family.config(dims)?;
    let spectrum = config_spectrum(&cfg, a.limits.limits()?)?;
    let exit_cfg = family.clone().with_block_len(a.exit_k).config(dims)?;
    let curve = combined_prediction(&exit_cfg, &spectrum, &a.snr.grid()?, a.iters, &a.est.settings())?;
    write_file(&a.out, &curve.to_csv())?;
    match curve.crossover_db {
        Some(x) => println!("{}: bound used from {x} dB", fmt_dims(&cfg.dims())),
        None => println!(
            "{}: EXIT prediction stays above the bound on this grid (flagged)",
            fmt_dims(&cfg.dims())
        ),
    }
    if let Ok(lim) = bpsk_limit_db(cfg.realized_rate()) {
        println!("BPSK capacity limit at this rate: {lim:.3} dB");
    }
    Ok(())
}

/// Turns a TOML value into flag tokens.
fn value_tokens(key: &str, v: &toml::Value, out: &mut Vec<String>) -> CliResult<()> {
    let flag = format!("--{key}");
    match v {
        toml::Value::Boolean(true) => out.push(flag),
        toml::Value::Boolean(false) => {}
        toml::Value::String(s) => out.extend([flag, s.clone()]),
        toml::Value::Integer(i) => out.extend([flag, i.to_string()]),
        toml::Value::Float(f) => out.extend([flag, f.to_string()]),
        toml::Value::Array(items) => {
            for item in items {
                value_tokens(key, item, out)?;
            }
        }
        _ => return Err(CliError::Usage(format!("config key '{key}' has an unsupported type"))),
    }
    Ok(())
}

/// Inserts the config file's values after the subcommand name and before the
/// user's own flags, so the latter win.
fn apply_config(argv: Vec<String>) -> CliResult<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let names: Vec<String> = <Cli as clap::CommandFactory>::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let Some(pos) = argv.iter().skip(1).position(|a| names.contains(a)).map(|p| p + 1) else {
        return Ok(argv);
    };
    let name = argv[pos].clone();
    let doc: toml::Table = read_file(Path::new(&path))?
        .parse()
        .map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let mut global = Vec::new();
    let mut section = Vec::new();
    for (key, value) in &doc {
        match (key.as_str(), value) {
            (k, toml::Value::Table(t)) if k == name => {
                for (k2, v2) in t {
                    value_tokens(k2, v2, &mut section)?;
                }
            }
            (_, toml::Value::Table(_)) => {}
            ("threads", v) => value_tokens("threads", v, &mut global)?,
            (k, _) => {
                return Err(CliError::Usage(format!(
                    "unknown top-level config key '{k}' (put flags under [{name}])"
                )))
            }
        }
    }
    let mut merged = Vec::with_capacity(argv.len() + section.len() + global.len());
    merged.push(argv[0].clone());
    if !argv.iter().any(|a| a == "--threads" || a.starts_with("--threads=")) {
        merged.extend(global);
    }
    merged.extend_from_slice(&argv[1..=pos]);
    merged.extend(section);
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok(merged)
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Tables(a) => cmd_tables(a),
        Command::ExitCurve(a) => cmd_exit_curve(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::WfGrid(a) => cmd_wf_grid(a),
        Command::Bound(a) => cmd_bound(a),
        Command::UbGrid(a) => cmd_ub_grid(a),
        Command::Strategy(a) => cmd_strategy(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

fn main() -> ExitCode {
    let argv = match apply_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = Cli::parse_from(argv);
    let result = run(&cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
