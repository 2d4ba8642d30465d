use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use sandman_core::experiment::{
    analyze, from_csv, mpi_table, render_csv, run_experiment, write_report, AnalysisOptions, ExperimentPlan, RunStore,
};
use sandman_core::stats::TTestKind;

use crate::settings::{CliError, Settings, EXIT_ANALYSIS};

const ANALYSIS_FILE: &str = "analysis.csv";

#[derive(Subcommand, Debug)]
pub enum ExperimentCommand {
    /// Generate every sample of a plan into the output directory
    Run(RunArgs),
    /// Compute all tables from a store and save them as analysis.csv
    Analyze(AnalyzeArgs),
    /// Render report.md and report.csv from analysis.csv
    Report,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Plan file (TOML): conditions, samples, seed, provider, output, control
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,
    /// Continue an existing run, generating only missing samples
    #[arg(long)]
    resume: bool,
    /// Override the plan's samples per condition
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Control condition label [default: the plan's control]
    #[arg(long, value_name = "LABEL")]
    control: Option<String>,
    /// Average task frequency over all samples, counting rejects as zero
    #[arg(long)]
    frequency_over_total: bool,
    /// Use the pooled-variance t-test instead of Welch's
    #[arg(long)]
    pooled: bool,
}

pub fn run(s: &Settings, cmd: &ExperimentCommand) -> Result<(), CliError> {
    match cmd {
        ExperimentCommand::Run(a) => run_plan(s, a),
        ExperimentCommand::Analyze(a) => analyze_store(s, a),
        ExperimentCommand::Report => report(s),
    }
}

fn run_plan(s: &Settings, a: &RunArgs) -> Result<(), CliError> {
    let mut plan = ExperimentPlan::load(&a.plan, &s.lexicon)?;
    if let Some(out) = &s.out {
        plan.output = out.clone();
    }
    if let Some(seed) = s.seed {
        plan.seed = seed;
    }
    if let Some(p) = s.provider {
        plan.provider = p;
    }
    if let Some(n) = a.samples {
        plan.samples_per_condition = n;
    }
    if s.temperature_set {
        plan.bootstrap.temperature = s.temperature;
    }
    plan.validate()?;
    if plan.output.join("manifest.json").exists() && !a.resume {
        return Err(CliError::config(format!(
            "{} already holds a run; pass --resume to continue it",
            plan.output.display()
        )));
    }
    let provider = s.provider_with(plan.provider, plan.seed, plan.transcript.as_deref())?;
    let store = run_experiment(&plan, provider.as_ref(), &s.catalog)?;
    for c in store.conditions() {
        let recs = store.records(&c.label);
        let accepted = store.samples(&c.label).filter(|(_, sch)| sch.is_some()).count();
        println!("{}: {} records, {} accepted, {} rejected", c.label, recs.len(), accepted, recs.len() - accepted);
    }
    Ok(())
}

fn analyze_store(s: &Settings, a: &AnalyzeArgs) -> Result<(), CliError> {
    let dir = s.out_dir();
    if !dir.join("manifest.json").exists() {
        return Err(CliError::new(
            EXIT_ANALYSIS,
            format!("{} holds no experiment run; use `experiment run` first", dir.display()),
        ));
    }
    let store = RunStore::load(&dir)?;
    let control = a.control.clone().unwrap_or_else(|| store.manifest().control.clone());
    let options = AnalysisOptions {
        frequency_over_total: a.frequency_over_total,
        t_test: if a.pooled { TTestKind::Pooled } else { TTestKind::Welch },
    };
    let mut tables = analyze(&store, &control, options)?;
    let reports = crate::mpi::load_reports(&dir.join("mpi"))?;
    if reports.iter().any(|r| r.label == control) {
        tables.mpi = Some(mpi_table(&reports, &control)?);
    } else if !reports.is_empty() {
        tracing::warn!(%control, "inventory reports found but none for the control; skipping that table");
    }
    let path = dir.join(ANALYSIS_FILE);
    fs::write(&path, render_csv(&tables)).map_err(|e| CliError::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn report(s: &Settings) -> Result<(), CliError> {
    let dir = s.out_dir();
    let path = dir.join(ANALYSIS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::new(EXIT_ANALYSIS, format!("{}: {e}; run `experiment analyze` first", path.display()))
    })?;
    let tables = from_csv(&text)?;
    let (md, csv) = write_report(&dir, &tables)?;
    println!("wrote {} and {}", md.display(), csv.display());
    Ok(())
}
