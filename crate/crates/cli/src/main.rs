mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{RunConfig, Seeds};
use drifteval::driftstats::{Alignment, EmergingMode};
use error::CliResult;
use std::path::PathBuf;
use std::process::ExitCode;

const DEFAULT_SEED: u64 = 20200301;

/// Temporal evaluation of comment moderation classifiers.
#[derive(Debug, Parser)]
#[command(name = "drifteval", version)]
struct Cli {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run seed; every random stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Comment CSV with ID, Date, Text and Rejected columns.
    input: PathBuf,

    /// Fail on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    NewInPeriod,
    NewInInterval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlignmentArg {
    Intersection,
    Union,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a comment CSV and print its class summary.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Also write summary.json and a manifest into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a shuffled control split with a time-stratified split.
    SplitEval {
        #[command(flatten)]
        input: InputArgs,
        /// First instant of the evaluation period (RFC 3339, date or YYYY-MM).
        #[arg(long)]
        eval_start: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on each time chunk and score on every chunk.
    Degrade {
        #[command(flatten)]
        input: InputArgs,
        /// Number of equal-length time chunks.
        #[arg(long)]
        chunks: Option<usize>,
        #[arg(long, value_enum)]
        alignment: Option<AlignmentArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List words that first appear inside a period.
    Emerging {
        #[command(flatten)]
        input: InputArgs,
        /// START/END, end exclusive.
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        group_months: Option<u32>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a sliding training window with a frozen one.
    SlidingWindow {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        step: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic comment CSV from a drift specification.
    Synth {
        /// Drift specification (JSON or TOML).
        spec: PathBuf,
        /// Output CSV; the manifest is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Also write realized-versus-specified drift diagnostics.
        #[arg(long)]
        diagnostics: bool,
    },
}

fn base_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(cfg)
}

fn apply_input(cfg: &mut RunConfig, input: &InputArgs) {
    cfg.strict |= input.strict;
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = base_config(&cli)?;
    let seeds = Seeds::derive(cfg.seed.unwrap_or(DEFAULT_SEED));
    let written = match cli.command {
        Command::Ingest { input, out } => {
            apply_input(&mut cfg, &input);
            let summary = commands::ingest(&input.input, &cfg, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            return Ok(());
        }
        Command::SplitEval { input, eval_start, out } => {
            apply_input(&mut cfg, &input);
            cfg.eval_start = eval_start.or(cfg.eval_start);
            commands::split_eval(&input.input, &cfg, &seeds, &out)?
        }
        Command::Degrade { input, chunks, alignment, out } => {
            apply_input(&mut cfg, &input);
            cfg.chunks = chunks.unwrap_or(cfg.chunks);
            if let Some(a) = alignment {
                cfg.alignment = match a {
                    AlignmentArg::Intersection => Alignment::Intersection,
                    AlignmentArg::Union => Alignment::Union,
                };
            }
            commands::degrade(&input.input, &cfg, &seeds, &out)?
        }
        Command::Emerging { input, period, group_months, top, mode, out } => {
            apply_input(&mut cfg, &input);
            cfg.period = period.or(cfg.period);
            cfg.group_months = group_months.unwrap_or(cfg.group_months);
            cfg.top = top.unwrap_or(cfg.top);
            if let Some(m) = mode {
                cfg.emerging_mode = match m {
                    ModeArg::NewInPeriod => EmergingMode::NewInPeriod,
                    ModeArg::NewInInterval => EmergingMode::NewInInterval,
                };
            }
            commands::emerging(&input.input, &cfg, &out)?
        }
        Command::SlidingWindow { input, window, step, out } => {
            apply_input(&mut cfg, &input);
            cfg.window_months = window.unwrap_or(cfg.window_months);
            cfg.step_months = step.unwrap_or(cfg.step_months);
            commands::sliding_window(&input.input, &cfg, &seeds, &out)?
        }
        Command::Synth { spec, out, diagnostics } => commands::synth(&spec, cfg.seed, &out, diagnostics)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
