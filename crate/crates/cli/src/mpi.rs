use std::fs;
use std::path::Path;

use clap::Args;

use sandman_core::experiment::{mpi_table, render_mpi_csv, render_mpi_markdown, slug, ProviderKind};
use sandman_core::persona::{OceanFactor, PersonaPrompt, TraitDirection};
use sandman_core::psychometrics::{administer_mpi, MpiOptions, TraitScoreReport};
use sandman_core::seeding::derive_seed;

use crate::settings::{CliError, Settings};

pub const CONTROL: &str = "Neutral";

#[derive(Args, Debug)]
pub struct MpiArgs {
    /// Factor to induce: O, C, E, A, N or the full name
    #[arg(long = "trait", value_name = "FACTOR")]
    factor: String,
    /// Pole to induce: pos or neg
    #[arg(long, value_name = "DIR")]
    direction: String,
    /// Passes through the inventory per condition
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Shuffle item order in each run
    #[arg(long)]
    shuffle: bool,
    /// Re-run the control even if a saved control report exists
    #[arg(long)]
    rerun_control: bool,
}

fn report_path(dir: &Path, label: &str) -> std::path::PathBuf {
    dir.join(format!("{}.json", slug(label)))
}

fn save(dir: &Path, report: &TraitScoreReport) -> Result<(), CliError> {
    let path = report_path(dir, &report.label);
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    fs::write(&path, s).map_err(|e| CliError::io(&path, e))
}

/// Every saved report in `dir`, by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<TraitScoreReport>, CliError> {
    let mut paths: Vec<_> = match fs::read_dir(dir) {
        Ok(rd) => {
            rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect()
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CliError::io(dir, e)),
    };
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))
        })
        .collect()
}

pub fn run(s: &Settings, a: &MpiArgs) -> Result<(), CliError> {
    let factor: OceanFactor = a.factor.parse().map_err(|e| CliError::config(format!("--trait: {e}")))?;
    let direction: TraitDirection = a.direction.parse().map_err(|e| CliError::config(format!("--direction: {e}")))?;
    if direction == TraitDirection::Neutral {
        return Err(CliError::config("--direction must be pos or neg; the neutral control runs automatically"));
    }
    if a.runs == 0 {
        return Err(CliError::config("--runs must be at least 1"));
    }
    let dir = s.out_dir().join("mpi");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let seed = s.seed();
    let provider = s.provider(s.provider.unwrap_or(ProviderKind::Mock), seed)?;

    let options = |label: &str| MpiOptions {
        runs: a.runs,
        temperature: s.temperature,
        model: s.model.clone(),
        shuffle_seed: a.shuffle.then(|| derive_seed(seed, label, 0)),
        ..MpiOptions::default()
    };
    let persona = s.lexicon.prompt(factor, direction);
    let mut conditions = vec![persona];
    if a.rerun_control || !report_path(&dir, CONTROL).exists() {
        conditions.push(PersonaPrompt::neutral());
    }
    for p in conditions {
        let label = p.label();
        tracing::info!(%label, runs = a.runs, "administering inventory");
        let report = administer_mpi(provider.as_ref(), &p, &s.bank, &options(&label))?;
        if report.invalid > 0 {
            eprintln!("warning: {label}: {} unparseable answers excluded", report.invalid);
        }
        save(&dir, &report)?;
    }

    let table = mpi_table(&load_reports(&dir)?, CONTROL)?;
    let md = render_mpi_markdown(&table);
    for (name, text) in [("report.md", md.as_str()), ("report.csv", render_mpi_csv(&table).as_str())] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    print!("{md}");
    Ok(())
}
