use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use clap::{Args, Subcommand};

use sandman_core::engine::{read_action_log, replay, Agent, AgentConfig, AgentProfile, AgentState, EngineError};
use sandman_core::experiment::ProviderKind;
use sandman_core::persona::PersonaPrompt;
use sandman_core::scheduler::BootstrapConfig;

use crate::settings::{CliError, Settings, EXIT_AGENT};

#[derive(Subcommand, Debug)]
pub enum AgentCommand {
    /// Bootstrap and run simulated days, logging every action
    Run(RunArgs),
    /// Rebuild the agent state from an action log
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Agent profile (TOML: name, role, biography, condition, typing)
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Persona label such as C+ or Neutral; overrides the profile's
    #[arg(long, value_name = "LABEL")]
    condition: Option<String>,
    /// Real seconds slept per simulated second; 0 runs flat out
    #[arg(long, default_value_t = 0.0)]
    speed: f64,
    /// Number of days to simulate
    #[arg(long, default_value_t = 1)]
    days: u32,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Action log to replay [default: <out>/actions.jsonl]
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    /// State file to compare against; a mismatch exits 5
    #[arg(long, value_name = "FILE")]
    check: Option<PathBuf>,
}

pub fn run(s: &Settings, cmd: &AgentCommand) -> Result<(), CliError> {
    match cmd {
        AgentCommand::Run(a) => run_days(s, a),
        AgentCommand::Replay(a) => replay_log(s, a),
    }
}

fn profile(s: &Settings, a: &RunArgs) -> Result<AgentProfile, CliError> {
    let mut p = match &a.profile {
        Some(path) => AgentProfile::load(path, &s.lexicon).map_err(|e| match e {
            EngineError::Io(e) => CliError::config(format!("{}: {e}", path.display())),
            e => CliError::from(e),
        })?,
        None => AgentProfile::new("Alex Morgan", "an office worker", PersonaPrompt::neutral()),
    };
    if let Some(label) = &a.condition {
        p.persona = if label.eq_ignore_ascii_case("neutral") {
            PersonaPrompt::neutral()
        } else {
            s.lexicon.prompt_for_label(label).map_err(|e| CliError::config(format!("--condition: {e}")))?
        };
    }
    Ok(p)
}

fn run_days(s: &Settings, a: &RunArgs) -> Result<(), CliError> {
    if !(a.speed.is_finite() && a.speed >= 0.0) {
        return Err(CliError::config("--speed must be a non-negative number"));
    }
    if a.days == 0 {
        return Err(CliError::config("--days must be at least 1"));
    }
    let profile = profile(s, a)?;
    let seed = s.seed();
    let provider = s.provider(s.provider.unwrap_or(ProviderKind::Mock), seed)?;
    let config = AgentConfig {
        bootstrap: BootstrapConfig { temperature: s.temperature, model: s.model.clone(), ..BootstrapConfig::default() },
        speed: a.speed,
        ..AgentConfig::default()
    };

    let dir = s.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let log_path = dir.join("actions.jsonl");
    let log = File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let mut agent = Agent::new(profile, provider.as_ref(), config, seed)?.with_sink(Box::new(BufWriter::new(log)));

    let mut result = Ok(());
    for _ in 0..a.days {
        match agent.run_day(&s.catalog) {
            Ok(d) => println!("day {}: {} tasks, {} failed, {} events", d.day, d.tasks, d.failures, d.events),
            Err(e) => {
                result = Err(CliError::from(e));
                break;
            }
        }
    }
    // Memory and state are written even after a failure so the partial day can be inspected.
    let episodic = dir.join("episodic.jsonl");
    fs::write(&episodic, agent.memory().episodic.to_jsonl()).map_err(|e| CliError::io(&episodic, e))?;
    let state = dir.join("state.json");
    fs::write(&state, state_json(&agent.snapshot())).map_err(|e| CliError::io(&state, e))?;
    result
}

fn state_json(state: &AgentState) -> String {
    serde_json::to_string_pretty(state).expect("state serialises") + "\n"
}

fn replay_log(s: &Settings, a: &ReplayArgs) -> Result<(), CliError> {
    let path = a.log.clone().unwrap_or_else(|| s.out_dir().join("actions.jsonl"));
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let events = read_action_log(BufReader::new(file))?;
    let state = replay(&events)?;
    print!("{}", state_json(&state));
    if let Some(check) = &a.check {
        let text = fs::read_to_string(check).map_err(|e| CliError::io(check, e))?;
        let expected: AgentState =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", check.display())))?;
        if expected != state {
            return Err(CliError::new(EXIT_AGENT, format!("replayed state differs from {}", check.display())));
        }
    }
    Ok(())
}
