//! `recommerce`: solve, sweep, compare and verify the durable-goods models
//! from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use recommerce_core::olg::OlgObjective;
use recommerce_core::statics::Parameter;
use recommerce_core::{ModelKind, ValidationReport};

use crate::config::{Format, RegimeChoice};

#[derive(Debug, Parser)]
#[command(name = "recommerce", version, about = "Durability under third-party and branded pre-owned markets")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "RECOMMERCE_OUT")]
    out: Option<PathBuf>,

    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output formats (repeatable).
    #[arg(long = "format", global = true, value_enum)]
    formats: Vec<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,

    #[arg(long, value_enum)]
    regime: Option<RegimeChoice>,

    /// Infinite-horizon objective.
    #[arg(long, value_parser = parse_objective)]
    objective: Option<OlgObjective>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium durability, prices, profit and welfare.
    Solve(ModelArgs),
    /// Optimal outcomes along a grid of one parameter.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_parameter)]
        param: Option<Parameter>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Branded minus third-party outcomes and the commission curve.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        /// Points on the commission grid.
        #[arg(long, default_value_t = 1001)]
        commission_points: usize,
    },
    /// Feasibility table of all 243 stationary candidates.
    OlgVerify {
        #[command(flatten)]
        model: ModelArgs,
        /// Durability to audit at; defaults to the regime's optimum.
        #[arg(long)]
        durability: Option<f64>,
    },
    /// Property suite over seeded random draws.
    Verify {
        /// RNG seed; required here or in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Draws per model for the broad properties [default: 1000].
        #[arg(long)]
        draws: Option<usize>,
        /// Draws per model checked against the grid oracle [default: 200].
        #[arg(long)]
        oracle_draws: Option<usize>,
        /// Draws per model for the steady-state audit [default: 200].
        #[arg(long)]
        audit_draws: Option<usize>,
        /// Oracle grid size [default: 1000000].
        #[arg(long)]
        grid_points: Option<usize>,
        /// Points on the commission grid [0, 1] [default: 1001].
        #[arg(long)]
        commission_points: Option<usize>,
        /// Flip one assertion so the suite must fail (harness self-test).
        #[arg(long, hide = true)]
        invert_ordering: bool,
    },
    /// Analytic optimum against the brute-force grid.
    OracleCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100_000)]
        grid_points: usize,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "two-period" => Ok(ModelKind::TwoPeriod),
        "olg" => Ok(ModelKind::Olg),
        _ => Err(format!("expected two-period or olg, got {s}")),
    }
}

fn parse_objective(s: &str) -> Result<OlgObjective, String> {
    match s {
        "with-first-period" => Ok(OlgObjective::WithFirstPeriod),
        "stream-only" => Ok(OlgObjective::StreamOnly),
        _ => Err(format!("expected with-first-period or stream-only, got {s}")),
    }
}

fn parse_parameter(s: &str) -> Result<Parameter, String> {
    match s {
        "alpha" => Ok(Parameter::Alpha),
        "beta" => Ok(Parameter::Beta),
        "delta" => Ok(Parameter::Delta),
        _ => Err(format!("expected alpha, beta or delta, got {s}")),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameters:\n{0}")]
    Validation(ValidationReport),
    #[error("{0}")]
    Core(recommerce_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    /// A checked property failed; the details were already printed.
    #[error("{0}")]
    PropertyFailure(String),
}

impl From<recommerce_core::Error> for CliError {
    fn from(e: recommerce_core::Error) -> Self {
        match e {
            recommerce_core::Error::InvalidParams(r) => CliError::Validation(r),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::PropertyFailure(_) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(path) => config::RunConfig::load(path)?,
        None => config::RunConfig::default(),
    };
    let ctx = commands::Context::new(cfg, cli.out, cli.formats)?;
    match cli.command {
        Command::Solve(m) => commands::solve(&ctx, &m),
        Command::Sweep { model, param, from, to, steps } => commands::sweep(&ctx, &model, param, from, to, steps),
        Command::Compare { model, commission_points } => commands::compare(&ctx, &model, commission_points),
        Command::OlgVerify { model, durability } => commands::olg_verify(&ctx, &model, durability),
        Command::Verify { seed, draws, oracle_draws, audit_draws, grid_points, commission_points, invert_ordering } => {
            commands::verify(
                &ctx,
                commands::VerifyFlags {
                    seed,
                    draws,
                    oracle_draws,
                    audit_draws,
                    grid_points,
                    commission_points,
                    invert_ordering,
                },
            )
        }
        Command::OracleCheck { model, grid_points } => commands::oracle_check(&ctx, &model, grid_points),
    }
}
