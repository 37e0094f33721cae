//! `hotlane`: run HOT-lane pricing scenarios and export plot-ready data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod failure;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hotlane_core::analytics::Gain;
use hotlane_core::{parse_config, ScenarioConfig};

use failure::Failure;
use output::Sink;

#[derive(Parser)]
#[command(
    name = "hotlane",
    version,
    about = "Dynamic pricing of high-occupancy toll lanes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML). Omitted keys take the reference values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory to write output files into instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the number of replications.
    #[arg(long, global = true)]
    replications: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's controller and write the trajectory and summary.
    Simulate,
    /// Run several controllers on the same demand and compare them.
    Compare(CompareArgs),
    /// Classify convergence across a gain grid and optionally bisect for the
    /// pattern boundary.
    Sweep(SweepArgs),
    /// Tabulate the optimal toll for constant demand.
    Analytic,
    /// Integrate the reduced queue/residual-capacity model.
    Approx(ApproxArgs),
}

#[derive(Args)]
struct CompareArgs {
    /// Controllers to compare: vot, integral, self_learning.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "vot,integral,self_learning"
    )]
    controllers: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    ClosedLoop,
    Approximate,
}

#[derive(Args)]
struct SweepArgs {
    /// Gain to vary.
    #[arg(long, value_parser = parse_gain, default_value = "k2")]
    gain: Gain,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Value of the other gain; defaults to the scenario's controller.
    #[arg(long)]
    fixed: Option<f64>,
    /// Bisect on k2 over [--from, --to].
    #[arg(long)]
    bisect: bool,
    #[arg(long, default_value_t = 0.005)]
    resolution: f64,
    #[arg(long, value_enum, default_value_t = ModelKind::ClosedLoop)]
    model: ModelKind,
    /// Classification window in minutes; defaults to a quarter of the horizon.
    #[arg(long)]
    tail_window: Option<f64>,
    /// Initial residual capacity for the reduced model.
    #[arg(long)]
    zeta0: Option<f64>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    /// Initial HOT queue; defaults to the scenario's initial queue.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Initial residual capacity; defaults to the value induced by the
    /// controller's first toll.
    #[arg(long)]
    zeta0: Option<f64>,
}

fn parse_gain(s: &str) -> Result<Gain, String> {
    match s {
        "k1" => Ok(Gain::K1),
        "k2" => Ok(Gain::K2),
        other => Err(format!("unknown gain `{other}` (expected k1 or k2)")),
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Failure::io(path, e))?,
        None => String::new(),
    };
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.replications {
        config.replications = n;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = load(cli)?;
    let sink = Sink::new(cli.out.as_deref())?;
    match &cli.command {
        Command::Simulate => commands::simulate(&config, &sink, cli.format),
        Command::Compare(args) => commands::compare(&config, args, &sink, cli.format),
        Command::Sweep(args) => commands::sweep(&config, args, &sink, cli.format),
        Command::Analytic => commands::analytic(&config, &sink, cli.format),
        Command::Approx(args) => commands::approx(&config, args, &sink, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hotlane: {e}");
            e.exit_code()
        }
    }
}
