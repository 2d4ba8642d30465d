//! `sandman`: persona inventory runs, schedule experiments and agent days.
//!
//! Exit codes: 0 ok, 1 unexpected I/O failure, 2 configuration error,
//! 3 provider error, 4 analysis precondition, 5 agent failure.

mod agent;
mod experiment;
mod mpi;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::{CliError, Settings};

#[derive(Parser)]
#[command(
    name = "sandman",
    version,
    about = "Persona-driven deceptive agents: inventories, schedule experiments, agent days"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// TOML settings file (provider, seed, out, temperature, model, endpoint,
    /// max_in_flight, lexicon, item_bank, catalog, transcript)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Model backend: mock, http or scripted
    #[arg(long, global = true, value_name = "KIND")]
    provider: Option<String>,
    /// Use the seeded offline mock provider (same as --provider mock)
    #[arg(long, global = true)]
    mock: bool,
    /// Master seed for every random choice
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; nothing is written outside it except --capture
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sampling temperature [default: 0.7]
    #[arg(long, global = true, value_name = "T")]
    temperature: Option<f64>,
    /// Append every request and response to this JSONL transcript
    #[arg(long, global = true, value_name = "FILE")]
    capture: Option<PathBuf>,
    /// Recorded transcript replayed by the scripted provider
    #[arg(long, global = true, value_name = "FILE")]
    transcript: Option<PathBuf>,
    /// More log output on stderr (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Administer the personality inventory to one induced persona (and the
    /// neutral control if it has not been run yet)
    Mpi(mpi::MpiArgs),
    /// Generate, analyse and report schedule experiments
    #[command(subcommand)]
    Experiment(experiment::ExperimentCommand),
    /// Simulate an agent's day or replay its action log
    #[command(subcommand)]
    Agent(agent::AgentCommand),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).with_target(false).init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::resolve(&cli.global)?;
    match cli.command {
        Command::Mpi(a) => mpi::run(&settings, &a),
        Command::Experiment(c) => experiment::run(&settings, &c),
        Command::Agent(c) => agent::run(&settings, &c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
