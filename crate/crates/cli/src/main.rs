//! `flipflop`: scales, tails, controlled points, entropy checks and the
//! acceptance self-test from the command line.
//!
//! Exit codes: 0 pass, 2 configuration error, 3 verification failure,
//! 4 infeasible parameters, 5 internal error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{Overrides, RunConfig};
use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

const VERIFICATION_FAILED: u8 = 3;

type Action = Box<dyn FnOnce(&RunConfig) -> Result<commands::Outcome, CliError>>;

#[derive(Parser, Debug)]
#[command(name = "flipflop", version, about = "Controlled points on a symbolic flip-flop model")]
struct Cli {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct ScaleArgs {
    /// Comma-separated factors κ_0, κ_1, ...
    #[arg(long)]
    factors: Option<String>,
    #[arg(long)]
    t0: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scale construction.
    Scale {
        #[command(subcommand)]
        action: ScaleCommand,
    },
    /// The rational tail R∞.
    Tail {
        #[command(subcommand)]
        action: TailCommand,
    },
    /// Controlled points and their certificates.
    Point {
        #[command(subcommand)]
        action: PointCommand,
    },
    /// Entropy estimates and checks on a word file.
    Entropy {
        #[command(subcommand)]
        action: EntropyCommand,
    },
    /// Skew-product orbits.
    Skew {
        #[command(subcommand)]
        action: SkewCommand,
    },
    /// The flip-flop to double flip-flop combinator on the shift model.
    Flipflop {
        #[command(subcommand)]
        action: FlipflopCommand,
    },
    /// Run every acceptance check.
    Selftest {
        #[command(flatten)]
        scale: ScaleArgs,
        /// `quick` or `full`.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum ScaleCommand {
    Check {
        #[command(flatten)]
        scale: ScaleArgs,
    },
}

#[derive(Subcommand, Debug)]
enum TailCommand {
    Build {
        #[command(flatten)]
        scale: ScaleArgs,
    },
    Verify {
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long)]
        upto: Option<u64>,
    },
    Density {
        #[command(flatten)]
        scale: ScaleArgs,
    },
    Approx {
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        upto: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum PointCommand {
    Build {
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        length: Option<u64>,
        /// Word file, one byte per symbol.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    Verify {
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Driving stream seed; defaults to the certificate's.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct WordArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Use only the first `length` symbols.
    #[arg(long)]
    length: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum EntropyCommand {
    Estimate {
        #[command(flatten)]
        word: WordArgs,
        /// Write the block-entropy profile as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    Bound {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        word: WordArgs,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    Abramov {
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        word: WordArgs,
    },
}

#[derive(Subcommand, Debug)]
enum SkewCommand {
    Run {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Initial fiber coordinate.
        #[arg(long = "fiber-t0")]
        fiber_t0: Option<f64>,
        /// Drive the orbit with the signs of this word instead of fair signs.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum FlipflopCommand {
    Demo,
}

fn apply_scale(o: &mut Overrides, s: &ScaleArgs) {
    o.set("factors", s.factors.clone());
    o.set("t0", s.t0);
}

fn apply_word(o: &mut Overrides, w: &WordArgs) {
    o.set("length", w.length);
    o.set("k", w.k);
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>), CliError> {
    let started = Instant::now();
    let mut o = match &cli.config {
        Some(p) => Overrides::load(p)?,
        None => Overrides::default(),
    };
    o.set("threads", cli.threads);
    let name: &str;
    let outcome = {
        use commands as c;
        // Record flag overrides, then resolve, then run.
        let action: Action = match cli.command {
            Command::Scale { action: ScaleCommand::Check { scale } } => {
                name = "scale check";
                apply_scale(&mut o, &scale);
                Box::new(c::scale_check)
            }
            Command::Tail { action } => match action {
                TailCommand::Build { scale } => {
                    name = "tail build";
                    apply_scale(&mut o, &scale);
                    Box::new(c::tail_build)
                }
                TailCommand::Verify { scale, upto } => {
                    name = "tail verify";
                    apply_scale(&mut o, &scale);
                    o.set("upto", upto);
                    Box::new(c::tail_verify)
                }
                TailCommand::Density { scale } => {
                    name = "tail density";
                    apply_scale(&mut o, &scale);
                    Box::new(c::tail_density)
                }
                TailCommand::Approx { scale, level, upto } => {
                    name = "tail approx";
                    apply_scale(&mut o, &scale);
                    o.set("level", level);
                    o.set("upto", upto);
                    Box::new(c::tail_approx)
                }
            },
            Command::Point { action } => match action {
                PointCommand::Build { scale, seed, length, out, cert } => {
                    name = "point build";
                    apply_scale(&mut o, &scale);
                    o.set("seed", seed);
                    o.set("length", length);
                    Box::new(move |cfg| c::point_build(cfg, out.as_deref(), cert.as_deref()))
                }
                PointCommand::Verify { scale, input, cert, seed } => {
                    name = "point verify";
                    apply_scale(&mut o, &scale);
                    let seed_flag = seed.is_some() || o.values.contains_key("seed");
                    o.set("seed", seed);
                    Box::new(move |cfg| c::point_verify(cfg, &input, cert.as_deref(), seed_flag))
                }
            },
            Command::Entropy { action } => match action {
                EntropyCommand::Estimate { word, csv } => {
                    name = "entropy estimate";
                    apply_word(&mut o, &word);
                    Box::new(move |cfg| c::entropy_estimate(cfg, &word.input, csv.as_deref()))
                }
                EntropyCommand::Bound { scale, word, tolerance } => {
                    name = "entropy bound";
                    apply_scale(&mut o, &scale);
                    apply_word(&mut o, &word);
                    o.set("tolerance", tolerance);
                    Box::new(move |cfg| c::entropy_bound(cfg, &word.input))
                }
                EntropyCommand::Abramov { scale, word } => {
                    name = "entropy abramov";
                    apply_scale(&mut o, &scale);
                    apply_word(&mut o, &word);
                    Box::new(move |cfg| c::entropy_abramov(cfg, &word.input))
                }
            },
            Command::Skew { action: SkewCommand::Run { lambda, steps, fiber_t0, input, seed, csv } } => {
                name = "skew run";
                o.set("lambda", lambda);
                o.set("steps", steps);
                o.set("fiber_t0", fiber_t0);
                o.set("seed", seed);
                Box::new(move |cfg| c::skew_run(cfg, input.as_deref(), csv.as_deref()))
            }
            Command::Flipflop { action: FlipflopCommand::Demo } => {
                name = "flipflop demo";
                Box::new(|_| c::flipflop_demo())
            }
            Command::Selftest { scale, profile, seed } => {
                name = "selftest";
                apply_scale(&mut o, &scale);
                o.set("profile", profile);
                o.set("seed", seed);
                Box::new(c::selftest)
            }
        };
        let cfg = RunConfig::resolve(&o)?;
        if let Some(n) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
        let outcome = action(&cfg)?;
        (cfg, outcome)
    };
    let (cfg, outcome) = outcome;
    let mut report = Report::new(name, &cfg, outcome.pass, outcome.result, started.elapsed().as_secs_f64());
    report.metadata.timings = outcome.timings;
    Ok((report, cli.report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, path)) => {
            if let Err(e) = report.write(path.as_deref()) {
                eprintln!("{e}");
                return ExitCode::from(e.code());
            }
            eprintln!("{}: {}", report.command, if report.pass { "pass" } else { "FAIL" });
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(VERIFICATION_FAILED)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
