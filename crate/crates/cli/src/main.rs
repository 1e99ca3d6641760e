//! Command-line front end for the `tailsum` library: distribution algebra
//! (`convolve`, `power`, `subtract`, `transform`), tail and class-table
//! queries, the normality check, the rarity-scoring pipeline, and a seeded
//! synthetic event generator.
//!
//! Every command is deterministic: the same inputs and flags produce
//! byte-identical output. Exit codes are 0 for success, 2 for unusable
//! input (bad flags, unreadable or malformed files), and 3 for a failed
//! computation or write.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use tailsum::convolution::{self, ConvolutionConfig, Strategy};
use tailsum::distribution::NormalizationPolicy;
use tailsum::io::{
    self, aggregate_events, emit_distribution_csv, generate_synthetic, parse_distribution_csv,
    parse_events_csv, write_divergence_csv, write_events_csv, write_pr_csv, write_quarantine_csv,
    write_report_csv, SyntheticConfig,
};
use tailsum::rarity::{self, RarityError, ScoreOptions, TagCountVector};
use tailsum::stats::{self, StatsError};
use tailsum::{Decimal, Distribution};

#[derive(Parser)]
#[command(
    name = "tailsum",
    version,
    about = "Exact statistics for sums of samples from a known discrete population"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distribution of the sum of one draw from each of two populations.
    Convolve {
        /// First population (value,probability CSV).
        f: PathBuf,
        /// Second population.
        g: PathBuf,
        #[command(flatten)]
        flags: ConvFlags,
    },
    /// Distribution of the sum of n independent draws from one population.
    Power {
        /// Population CSV.
        dist: PathBuf,
        /// Number of draws.
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        flags: ConvFlags,
    },
    /// Distribution of the difference of draws: first minus second.
    Subtract {
        /// Minuend population.
        f: PathBuf,
        /// Subtrahend population.
        g: PathBuf,
        #[command(flatten)]
        flags: ConvFlags,
    },
    /// Relabel every value as a·x + b, leaving probabilities untouched.
    Transform {
        dist: PathBuf,
        /// Scale factor (decimal, non-zero).
        #[arg(long, allow_hyphen_values = true)]
        a: Decimal,
        /// Offset (decimal).
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        b: Decimal,
        /// Rescale input masses that don't sum to 1 instead of rejecting them.
        #[arg(long)]
        renormalize: bool,
        /// Output file (stdout when omitted).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Bin the distribution into fixed-width classes.
    Table {
        dist: PathBuf,
        /// Class interval width (decimal, positive).
        #[arg(long)]
        width: Decimal,
        /// Classes are [origin + m·width, origin + (m+1)·width).
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        origin: Decimal,
        /// Rescale input masses that don't sum to 1 instead of rejecting them.
        #[arg(long)]
        renormalize: bool,
        /// Output file (stdout when omitted).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Exact tail probability at a threshold.
    #[command(group(ArgGroup::new("side").required(true).args(["upper", "lower"])))]
    Tail {
        dist: PathBuf,
        /// Threshold t.
        #[arg(allow_hyphen_values = true)]
        t: f64,
        /// P(X ≥ t): mass at and above the threshold.
        #[arg(long)]
        upper: bool,
        /// P(X ≤ t): mass at and below the threshold.
        #[arg(long)]
        lower: bool,
        /// Rescale input masses that don't sum to 1 instead of rejecting them.
        #[arg(long)]
        renormalize: bool,
    },
    /// Check whether a distribution is near-normal by its shape moments.
    ///
    /// Prints PASS or FAIL with the measured skewness and excess kurtosis;
    /// the exit code is 0 either way.
    CheckClt {
        dist: PathBuf,
        /// Largest |skewness| that still passes.
        #[arg(long, default_value_t = stats::DEFAULT_SKEW_MAX)]
        skew_max: f64,
        /// Largest |excess kurtosis| that still passes.
        #[arg(long, default_value_t = stats::DEFAULT_KURT_MAX)]
        kurt_max: f64,
        /// Rescale input masses that don't sum to 1 instead of rejecting them.
        #[arg(long)]
        renormalize: bool,
    },
    /// Score every item's total against the exact law of its visitor sum.
    Rarity(RarityArgs),
    /// Fabricate a seeded, reproducible event dataset.
    GenSynth(GenSynthArgs),
}

/// Flags shared by the three convolution commands.
#[derive(Args)]
struct ConvFlags {
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Rescale input masses that don't sum to 1 instead of rejecting them.
    #[arg(long)]
    renormalize: bool,
    /// Drop output masses below this, then rescale (0 keeps everything).
    #[arg(long, value_name = "EPS", default_value_t = 0.0)]
    prune_eps: f64,
    /// FFT use: decide by cost, force on, or force off.
    #[arg(long, value_enum, default_value_t = FftChoice::Auto, value_name = "WHEN")]
    fft: FftChoice,
}

#[derive(Clone, Copy, ValueEnum)]
enum FftChoice {
    /// Cost-based choice per convolution.
    Auto,
    /// Every convolution runs through the FFT.
    On,
    /// Exact pairwise kernel only.
    Off,
}

#[derive(Args)]
struct RarityArgs {
    /// Event rows: item,visitor,compensation CSV.
    events: PathBuf,
    /// Report file. The quarantine list (and the optional pr and divergence
    /// tables) land next to it as NAME.quarantine.csv and so on.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Population distribution to score against; default is the one
    /// aggregated from the events themselves.
    #[arg(long, value_name = "FILE")]
    dist: Option<PathBuf>,
    /// Items with fewer visits than this are not scored (their visits still
    /// count toward the aggregated population).
    #[arg(long, value_name = "N", default_value_t = io::DEFAULT_MIN_VISITORS)]
    min_visitors: u64,
    /// Keep only the first visit of each (item, visitor) pair.
    #[arg(long)]
    dedupe: bool,
    /// Half-step continuity correction on the normal tail.
    #[arg(long)]
    continuity: bool,
    /// p_t below this counts as genuinely rare in the pr table.
    #[arg(long, value_name = "P", default_value_t = rarity::DEFAULT_RARE_CUTOFF)]
    rare_cutoff: f64,
    /// Smallest tail probability kept in the divergence table.
    #[arg(long, value_name = "P", default_value_t = rarity::DEFAULT_DIVERGENCE_FLOOR)]
    floor: f64,
    /// Sweep spend thresholds START:STOP:STEP and write precision/recall
    /// rows to the pr table.
    #[arg(long, value_name = "START:STOP:STEP")]
    pr_curve: Option<String>,
    /// Write (visitors, log10(p_t/p_z)) rows to the divergence table.
    #[arg(long)]
    divergence: bool,
    /// Rescale an external --dist file whose masses don't sum to 1.
    #[arg(long)]
    renormalize: bool,
    /// FFT use: decide by cost, force on, or force off.
    #[arg(long, value_enum, default_value_t = FftChoice::Auto, value_name = "WHEN")]
    fft: FftChoice,
    /// Drop convolved masses below this, then rescale (0 keeps everything).
    #[arg(long, value_name = "EPS", default_value_t = 0.0)]
    prune_eps: f64,
}

#[derive(Args)]
struct GenSynthArgs {
    /// How many items to fabricate.
    #[arg(long, value_name = "N")]
    items: u64,
    /// Distribution of per-item visitor counts (CSV, non-negative integers).
    #[arg(long, value_name = "FILE")]
    visitors: PathBuf,
    /// Distribution of per-visit compensation (CSV, non-negative integers).
    #[arg(long, value_name = "FILE")]
    compensation: PathBuf,
    /// Stream seed; the same seed reproduces the same dataset.
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Rescale input masses that don't sum to 1 instead of rejecting them.
    #[arg(long)]
    renormalize: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Convolve { f, g, flags } => cmd_convolve(&f, &g, &flags),
        Command::Power { dist, n, flags } => cmd_power(&dist, n, &flags),
        Command::Subtract { f, g, flags } => cmd_subtract(&f, &g, &flags),
        Command::Transform {
            dist,
            a,
            b,
            renormalize,
            out,
        } => cmd_transform(&dist, a, b, renormalize, out.as_deref()),
        Command::Table {
            dist,
            width,
            origin,
            renormalize,
            out,
        } => cmd_table(&dist, width, origin, renormalize, out.as_deref()),
        Command::Tail {
            dist,
            t,
            upper,
            lower: _,
            renormalize,
        } => cmd_tail(&dist, t, upper, renormalize),
        Command::CheckClt {
            dist,
            skew_max,
            kurt_max,
            renormalize,
        } => cmd_check_clt(&dist, skew_max, kurt_max, renormalize),
        Command::Rarity(args) => cmd_rarity(&args),
        Command::GenSynth(args) => cmd_gen_synth(&args),
    }
}

/// What went wrong, bucketed by exit code: unusable input is 2, a failed
/// computation or write is 3.
enum Failure {
    Input(anyhow::Error),
    Compute(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Compute(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Compute(e) => e,
        }
    }
}

/// Wraps a library result whose failure means the computation (not the
/// input) is at fault.
fn compute<T, E>(result: Result<T, E>) -> Result<T, Failure>
where
    E: std::error::Error + Send + Sync + 'static,
{
    result.map_err(|e| Failure::Compute(anyhow::Error::new(e)))
}

fn policy(renormalize: bool) -> NormalizationPolicy {
    if renormalize {
        NormalizationPolicy::Renormalize
    } else {
        NormalizationPolicy::Strict
    }
}

fn read_dist(path: &Path, renormalize: bool) -> Result<Distribution, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)?;
    parse_distribution_csv(&text, policy(renormalize))
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Input)
}

fn write_output(text: &str, out: Option<&Path>) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Compute),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

impl ConvFlags {
    fn config(&self) -> ConvolutionConfig {
        conv_config(self.fft, self.prune_eps)
    }
}

impl FftChoice {
    fn strategy(self) -> Strategy {
        match self {
            FftChoice::Auto => Strategy::Auto,
            FftChoice::On => Strategy::Fft,
            FftChoice::Off => Strategy::Naive,
        }
    }
}

fn conv_config(fft: FftChoice, prune_eps: f64) -> ConvolutionConfig {
    ConvolutionConfig {
        strategy: fft.strategy(),
        prune_eps,
        ..ConvolutionConfig::default()
    }
}

fn cmd_convolve(f: &Path, g: &Path, flags: &ConvFlags) -> CmdResult {
    let f = read_dist(f, flags.renormalize)?;
    let g = read_dist(g, flags.renormalize)?;
    let h = compute(convolution::convolve_with(&f, &g, &flags.config()))?;
    write_output(&emit_distribution_csv(&h), flags.out.as_deref())
}

fn cmd_power(dist: &Path, n: u64, flags: &ConvFlags) -> CmdResult {
    let d = read_dist(dist, flags.renormalize)?;
    let p = compute(convolution::convolve_power_with(&d, n, &flags.config()))?;
    write_output(&emit_distribution_csv(&p), flags.out.as_deref())
}

fn cmd_subtract(f: &Path, g: &Path, flags: &ConvFlags) -> CmdResult {
    let f = read_dist(f, flags.renormalize)?;
    let g = read_dist(g, flags.renormalize)?;
    let h = compute(convolution::subtract_convolve_with(&f, &g, &flags.config()))?;
    write_output(&emit_distribution_csv(&h), flags.out.as_deref())
}

fn cmd_transform(
    dist: &Path,
    a: Decimal,
    b: Decimal,
    renormalize: bool,
    out: Option<&Path>,
) -> CmdResult {
    let d = read_dist(dist, renormalize)?;
    let t = compute(d.linear_transform(a, b))?;
    write_output(&emit_distribution_csv(&t), out)
}

fn cmd_table(
    dist: &Path,
    width: Decimal,
    origin: Decimal,
    renormalize: bool,
    out: Option<&Path>,
) -> CmdResult {
    let d = read_dist(dist, renormalize)?;
    let table = stats::frequency_table(&d, width, origin).map_err(|e| match e {
        // A non-positive width is the user's mistake, not the math's.
        StatsError::NonPositiveWidth(_) => Failure::Input(anyhow::Error::new(e)),
        _ => Failure::Compute(anyhow::Error::new(e)),
    })?;
    let mut text = String::from("lower,probability\n");
    for bin in &table.bins {
        text.push_str(&format!("{},{}\n", bin.lower_edge, bin.probability));
    }
    write_output(&text, out)
}

fn cmd_tail(dist: &Path, t: f64, upper: bool, renormalize: bool) -> CmdResult {
    let d = read_dist(dist, renormalize)?;
    let p = if upper {
        stats::upper_tail(&d, t)
    } else {
        stats::lower_tail(&d, t)
    };
    println!("{p}");
    Ok(())
}

fn cmd_check_clt(dist: &Path, skew_max: f64, kurt_max: f64, renormalize: bool) -> CmdResult {
    let d = read_dist(dist, renormalize)?;
    let v = compute(stats::clt_check(&d, skew_max, kurt_max))?;
    println!("{}", if v.passes { "PASS" } else { "FAIL" });
    println!("skewness {} (bound {})", v.skewness, v.skew_max);
    println!("excess_kurtosis {} (bound {})", v.excess_kurtosis, v.kurt_max);
    Ok(())
}

fn cmd_rarity(args: &RarityArgs) -> CmdResult {
    let text = fs::read_to_string(&args.events)
        .with_context(|| format!("reading {}", args.events.display()))
        .map_err(Failure::Input)?;
    let rows = parse_events_csv(&text)
        .with_context(|| format!("parsing {}", args.events.display()))
        .map_err(Failure::Input)?;
    let agg = aggregate_events(&rows, args.min_visitors, args.dedupe)
        .with_context(|| format!("aggregating {}", args.events.display()))
        .map_err(Failure::Input)?;
    let g = match &args.dist {
        Some(path) => read_dist(path, args.renormalize)?,
        None => agg.compensation_dist.clone(),
    };

    let opts = ScoreOptions {
        continuity_correction: args.continuity,
        convolution: conv_config(args.fft, args.prune_eps),
    };
    let mut outcome = compute(rarity::score_with(&g, &agg.records, &opts))?;

    // L and L′ come from the per-level breakdowns the aggregation carries
    // parallel to its records. An external --dist may lack a level an item
    // observed; those items keep empty index fields.
    let levels: HashMap<&str, &TagCountVector> = agg
        .records
        .iter()
        .map(|r| r.item_id.as_str())
        .zip(agg.tag_vectors.iter())
        .collect();
    for result in &mut outcome.results {
        let Some(v) = levels.get(result.item_id.as_str()) else {
            continue;
        };
        result.l_index = index_or_skip(rarity::l_index(&g, v))?;
        result.l_prime_index = index_or_skip(rarity::l_prime_index(&g, v))?;
    }

    let write = |path: PathBuf, text: String| -> CmdResult {
        fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Compute)
    };
    write(args.out.clone(), write_report_csv(&outcome.results))?;
    write(
        sibling(&args.out, "quarantine"),
        write_quarantine_csv(&outcome.quarantine),
    )?;
    if let Some(sweep) = &args.pr_curve {
        let thresholds = parse_sweep(sweep).map_err(Failure::Input)?;
        let points = rarity::pr_curve(&outcome.results, args.rare_cutoff, &thresholds);
        write(sibling(&args.out, "pr"), write_pr_csv(&points))?;
    }
    if args.divergence {
        let rows = rarity::divergence_report(&outcome.results, args.floor);
        write(sibling(&args.out, "divergence"), write_divergence_csv(&rows))?;
    }
    Ok(())
}

fn index_or_skip(result: Result<f64, RarityError>) -> Result<Option<f64>, Failure> {
    match result {
        Ok(l) => Ok(Some(l)),
        Err(RarityError::UnsupportedLevel(_)) => Ok(None),
        Err(e) => Err(Failure::Compute(anyhow::Error::new(e))),
    }
}

fn cmd_gen_synth(args: &GenSynthArgs) -> CmdResult {
    let visitors = read_dist(&args.visitors, args.renormalize)?;
    let compensation = read_dist(&args.compensation, args.renormalize)?;
    let config = SyntheticConfig {
        num_items: args.items,
        visitor_count_distribution: visitors,
        compensation_distribution: compensation,
        random_seed: args.seed,
    };
    let rows = generate_synthetic(&config).map_err(|e| Failure::Input(anyhow::Error::new(e)))?;
    write_output(&write_events_csv(&rows), args.out.as_deref())
}

/// `report.csv` with tag `quarantine` → `report.quarantine.csv`.
fn sibling(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

/// Expands `start:stop:step` into an ascending threshold list, both ends
/// included (the top one within a rounding hair).
fn parse_sweep(sweep: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = sweep.split(':').collect();
    let [start, stop, step] = parts[..] else {
        bail!("sweep must be START:STOP:STEP, got {sweep:?}");
    };
    let start: f64 = start.parse().context("sweep start")?;
    let stop: f64 = stop.parse().context("sweep stop")?;
    let step: f64 = step.parse().context("sweep step")?;
    if !(step > 0.0) {
        bail!("sweep step must be positive, got {step}");
    }
    if stop < start {
        bail!("sweep stop {stop} is below start {start}");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}
