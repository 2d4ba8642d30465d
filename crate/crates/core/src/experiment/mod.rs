//! Multi-condition schedule experiments: plan files, the on-disk run store,
//! analysis into report tables, and markdown/CSV rendering.

mod analysis;
mod report;
mod store;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::persona::TraitLexicon;
use crate::scheduler::{BootstrapConfig, GenerationCondition, SchedulerError};

pub use analysis::{
    analyze, analyze_conditions, mpi_table, AcceptedSample, AnalysisOptions, Cell, ConditionData, MpiCell, MpiRow,
    MpiTable, PositionCell, RejectCounts, ReportTables, TaskLabel, TaskRow,
};
pub use report::{from_csv, render_csv, render_markdown, render_mpi_csv, render_mpi_markdown, write_report};
pub use store::{run_experiment, Manifest, RecordOutcome, RunRecord, RunStore, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("store version mismatch: {0}")]
    Version(String),
    #[error("control condition `{0}` is not in the store")]
    ControlMissing(String),
    #[error("control condition `{label}` has {accepted} accepted samples, need at least 2")]
    InsufficientControl { label: String, accepted: usize },
    #[error("provider error: {0}")]
    Provider(GatewayError),
    #[error("corrupt store: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

impl From<SchedulerError> for ExperimentError {
    fn from(e: SchedulerError) -> Self {
        match e {
            SchedulerError::Provider(g) => Self::Provider(g),
            other => Self::Format(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
    Scripted,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(Self::Mock),
            "http" | "real" | "live" => Ok(Self::Http),
            "scripted" => Ok(Self::Scripted),
            other => Err(format!("unknown provider `{other}` (mock, http or scripted)")),
        }
    }
}

pub const DEFAULT_SAMPLES: usize = 500;

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_control() -> String {
    "Neutral".to_string()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// The TOML form of a plan. Conditions are labels resolved against a lexicon.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    provider: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transcript: Option<PathBuf>,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default = "default_control")]
    control: String,
    conditions: Vec<String>,
    #[serde(default)]
    bootstrap: BootstrapConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub conditions: Vec<GenerationCondition>,
    pub samples_per_condition: usize,
    pub seed: u64,
    pub provider: ProviderKind,
    /// Recorded transcript for the scripted provider.
    pub transcript: Option<PathBuf>,
    pub output: PathBuf,
    pub control: String,
    pub bootstrap: BootstrapConfig,
}

impl ExperimentPlan {
    pub fn new(conditions: Vec<GenerationCondition>, samples_per_condition: usize, seed: u64) -> Self {
        Self {
            conditions,
            samples_per_condition,
            seed,
            provider: ProviderKind::Mock,
            transcript: None,
            output: default_output(),
            control: default_control(),
            bootstrap: BootstrapConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str, lexicon: &TraitLexicon) -> Result<Self, ExperimentError> {
        let file: PlanFile = toml::from_str(s).map_err(|e| ExperimentError::Plan(e.to_string()))?;
        let conditions = file
            .conditions
            .iter()
            .map(|l| {
                GenerationCondition::from_label(l, lexicon).map_err(|e| ExperimentError::Plan(format!("`{l}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let plan = Self {
            conditions,
            samples_per_condition: file.samples,
            seed: file.seed,
            provider: file.provider,
            transcript: file.transcript,
            output: file.output,
            control: file.control,
            bootstrap: file.bootstrap,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path, lexicon: &TraitLexicon) -> Result<Self, ExperimentError> {
        let s = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&s, lexicon)
    }

    pub fn to_toml_string(&self) -> String {
        let file = PlanFile {
            seed: self.seed,
            samples: self.samples_per_condition,
            provider: self.provider,
            transcript: self.transcript.clone(),
            output: self.output.clone(),
            control: self.control.clone(),
            conditions: self.conditions.iter().map(|c| c.label.clone()).collect(),
            bootstrap: self.bootstrap.clone(),
        };
        toml::to_string(&file).expect("plan serialises")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.conditions.is_empty() {
            return Err(ExperimentError::Plan("no conditions".into()));
        }
        if self.samples_per_condition == 0 {
            return Err(ExperimentError::Plan("samples must be at least 1".into()));
        }
        let mut labels = HashSet::new();
        let mut slugs = HashSet::new();
        for c in &self.conditions {
            if !labels.insert(c.label.as_str()) {
                return Err(ExperimentError::Plan(format!("duplicate condition `{}`", c.label)));
            }
            if !slugs.insert(slug(&c.label)) {
                return Err(ExperimentError::Plan(format!("condition `{}` collides with another on disk", c.label)));
            }
        }
        if self.provider == ProviderKind::Scripted && self.transcript.is_none() {
            return Err(ExperimentError::Plan("the scripted provider needs a transcript".into()));
        }
        if !(self.bootstrap.temperature.is_finite() && self.bootstrap.temperature >= 0.0) {
            return Err(ExperimentError::Plan(format!("bad temperature {}", self.bootstrap.temperature)));
        }
        Ok(())
    }

    pub fn condition(&self, label: &str) -> Option<&GenerationCondition> {
        self.conditions.iter().find(|c| c.label == label)
    }
}

/// Directory name for a condition label: `C+` -> `c-pos`,
/// `Sys & Rand` -> `sys-and-rand`.
pub fn slug(label: &str) -> String {
    let mut raw = String::new();
    for c in label.replace('&', " and ").chars() {
        match c {
            '+' => raw.push_str("-pos"),
            '-' | '\u{2212}' => raw.push_str("-neg"),
            c if c.is_ascii_alphanumeric() => raw.push(c.to_ascii_lowercase()),
            _ => raw.push('-'),
        }
    }
    raw.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("Neutral"), "neutral");
        assert_eq!(slug("C+"), "c-pos");
        assert_eq!(slug("C-"), "c-neg");
        assert_eq!(slug("Sys & Rand"), "sys-and-rand");
        assert_eq!(slug("Baseline"), "baseline");
    }

    #[test]
    fn plan_round_trip_and_validation() {
        let lex = TraitLexicon::builtin();
        let plan = ExperimentPlan::from_toml_str("seed = 3\nsamples = 20\nconditions = [\"Neutral\", \"C+\"]\n", &lex)
            .unwrap();
        assert_eq!(plan.samples_per_condition, 20);
        assert_eq!(plan.control, "Neutral");
        assert_eq!(plan.conditions[1].label, "C+");
        assert_eq!(ExperimentPlan::from_toml_str(&plan.to_toml_string(), &lex).unwrap(), plan);

        for bad in [
            "conditions = []\n",
            "samples = 0\nconditions = [\"Neutral\"]\n",
            "conditions = [\"C+\", \"c+\"]\n",
            "conditions = [\"Q+\"]\n",
            "provider = \"scripted\"\nconditions = [\"Neutral\"]\n",
            "conditions = [\"Neutral\"]\nbogus = 1\n",
        ] {
            assert!(matches!(ExperimentPlan::from_toml_str(bad, &lex), Err(ExperimentError::Plan(_))), "{bad}");
        }
    }
}
