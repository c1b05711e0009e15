use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polarlab::metrics::pc_gap_lower_bound;
use polarlab::process::{run, threads_from_env, with_threads, DEFAULT_DELTA};
use polarlab::verify::{run_suite, Suite};
use polarlab::{blackwell_measure, delta_determining_subgroup, presets, wasserstein, Channel, RunConfig, MERGE_TAU};

#[derive(Parser)]
#[command(name = "polarlab", version, about = "Channel polarization over finite Abelian groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate synthetic channels along polarization paths and write a report.
    Polarize(PolarizeArgs),
    /// Run a built-in verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Report which subgroup, if any, δ-determines a channel.
    Classify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Distance between the Blackwell measures of two channels.
    Distance(DistanceArgs),
}

#[derive(Args)]
struct Source {
    /// Channel JSON file.
    #[arg(long, conflicts_with = "preset")]
    channel: Option<PathBuf>,
    /// Built-in channel, e.g. `bec:0.5` or `dh:Z4:{0,2}`.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct PolarizeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Posterior merge tolerance.
    #[arg(long, default_value_t = MERGE_TAU)]
    tau: f64,
    /// Atom budget per synthetic channel.
    #[arg(long, default_value_t = polarlab::polar::DEFAULT_ATOM_BUDGET)]
    budget: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Wasserstein,
    PcBound,
}

#[derive(Args)]
struct DistanceArgs {
    /// Channel JSON files; files are taken before presets.
    #[arg(long)]
    channel: Vec<PathBuf>,
    /// Built-in channels.
    #[arg(long)]
    preset: Vec<String>,
    #[arg(long, value_enum, default_value_t = Metric::Wasserstein)]
    metric: Metric,
    /// Random sources for the pc-bound metric.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest message alphabet for the pc-bound metric.
    #[arg(long, default_value_t = 4)]
    m_max: usize,
}

fn load_file(path: &Path) -> Result<Channel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Channel::from_json(&text).with_context(|| format!("invalid channel file {}", path.display()))
}

fn load(source: &Source) -> Result<Channel> {
    match (&source.channel, &source.preset) {
        (Some(path), None) => load_file(path),
        (None, Some(spec)) => Ok(presets::from_spec(spec)?),
        _ => bail!("give exactly one of --channel or --preset"),
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_atomically(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write into {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| anyhow!("cannot write {}: {}", path.display(), e.error))?;
    Ok(())
}

fn polarize(args: &PolarizeArgs) -> Result<ExitCode> {
    let w = load(&args.source)?;
    w.require_group()?;
    let config = match args.mode {
        ModeArg::Exhaustive => RunConfig::exhaustive(args.depth, args.delta, args.tau),
        ModeArg::Sample => RunConfig::sampled(args.depth, args.samples, args.seed, args.delta, args.tau),
    }
    .with_budget(args.budget);
    let report = with_threads(threads_from_env(), || run(&w, &config))?;
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &args.out {
        Some(path) => write_atomically(path, &text)?,
        None => emit(&text)?,
    }
    if report.aggregates.failed > 0 {
        eprintln!("{} of {} paths failed", report.aggregates.failed, report.aggregates.records);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(suite: &str) -> Result<ExitCode> {
    let suite: Suite = suite.parse()?;
    let checks = with_threads(threads_from_env(), || run_suite(suite))?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut text: String = checks.iter().map(|c| format!("{c}\n")).collect();
    text += &format!("{} checks, {} failed\n", checks.len(), failed);
    emit(&text)?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn classify(source: &Source, delta: f64) -> Result<ExitCode> {
    let w = load(source)?;
    let result = delta_determining_subgroup(&w, delta)?;
    emit(&(serde_json::to_string_pretty(&result)? + "\n"))?;
    Ok(if result.determined { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn distance(args: &DistanceArgs) -> Result<ExitCode> {
    let mut channels = args.channel.iter().map(|p| load_file(p)).collect::<Result<Vec<_>>>()?;
    for spec in &args.preset {
        channels.push(presets::from_spec(spec)?);
    }
    let [a, b] = channels.as_slice() else {
        bail!("distance needs exactly two channels, got {}", channels.len());
    };
    let (ma, mb) = (blackwell_measure(a)?, blackwell_measure(b)?);
    let out = match args.metric {
        Metric::Wasserstein => {
            let d = with_threads(threads_from_env(), || wasserstein(&ma, &mb))?;
            serde_json::json!({ "metric": "wasserstein", "distance": d })
        }
        Metric::PcBound => {
            if args.trials == 0 || args.m_max == 0 {
                bail!("--trials and --m-max must be at least 1");
            }
            let bound = pc_gap_lower_bound(&ma, &mb, args.trials, args.seed, args.m_max)?;
            serde_json::json!({ "metric": "pc-bound", "distance": bound.value, "witness": bound.witness })
        }
    };
    emit(&(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Polarize(args) => polarize(args),
        Command::Verify { suite } => verify(suite),
        Command::Classify { source, delta } => classify(source, *delta),
        Command::Distance(args) => distance(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
