use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use sandman_core::engine::EngineError;
use sandman_core::experiment::{ExperimentError, ProviderKind};
use sandman_core::gateway::{
    CaptureProvider, ChatProvider, Gateway, GatewayError, HttpProvider, MockBehaviour, MockProvider, PlannerConfig,
    ProviderConfig, ScriptedTranscript, API_KEY_ENV, DEFAULT_MAX_IN_FLIGHT, DEFAULT_MODEL, DEFAULT_TEMPERATURE,
};
use sandman_core::persona::TraitLexicon;
use sandman_core::psychometrics::{answerer_config, MpiItemBank, PsychometricsError};
use sandman_core::scheduler::TaskCatalog;

use crate::GlobalArgs;

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_ANALYSIS: i32 = 4;
pub const EXIT_AGENT: i32 = 5;
pub const EXIT_OTHER: i32 = 1;

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_OTHER, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        Self::new(EXIT_PROVIDER, format!("provider error: {e}"))
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        let code = match &e {
            ExperimentError::Plan(_) | ExperimentError::Version(_) | ExperimentError::Format(_) => EXIT_CONFIG,
            ExperimentError::ControlMissing(_) | ExperimentError::InsufficientControl { .. } => EXIT_ANALYSIS,
            ExperimentError::Provider(_) => EXIT_PROVIDER,
            ExperimentError::Io { .. } => EXIT_OTHER,
        };
        Self::new(code, e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::Provider(_) => EXIT_PROVIDER,
            EngineError::Profile(_) => EXIT_CONFIG,
            EngineError::Io(_) => EXIT_OTHER,
            _ => EXIT_AGENT,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PsychometricsError> for CliError {
    fn from(e: PsychometricsError) -> Self {
        let code = match &e {
            PsychometricsError::Provider { .. } => EXIT_PROVIDER,
            PsychometricsError::InvalidBank(_) | PsychometricsError::Io(_) => EXIT_CONFIG,
            _ => EXIT_OTHER,
        };
        Self::new(code, e.to_string())
    }
}

/// `--config` file. Relative paths are resolved against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliConfig {
    provider: Option<ProviderKind>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    temperature: Option<f64>,
    model: Option<String>,
    endpoint: Option<String>,
    max_in_flight: Option<usize>,
    lexicon: Option<PathBuf>,
    item_bank: Option<PathBuf>,
    catalog: Option<PathBuf>,
    transcript: Option<PathBuf>,
}

/// Flags, config file and defaults merged, in that order of precedence.
pub struct Settings {
    /// Provider named on the command line or in the config file.
    pub provider: Option<ProviderKind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub temperature: f64,
    /// Whether `temperature` came from a flag or the config file.
    pub temperature_set: bool,
    pub model: String,
    pub endpoint: Option<String>,
    pub max_in_flight: usize,
    pub lexicon: TraitLexicon,
    pub bank: MpiItemBank,
    pub catalog: TaskCatalog,
    pub transcript: Option<PathBuf>,
    pub capture: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(g: &GlobalArgs) -> Result<Self, CliError> {
        let (cfg, base) = match &g.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                let cfg: CliConfig =
                    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (CliConfig::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

        let provider = if g.mock {
            Some(ProviderKind::Mock)
        } else {
            match &g.provider {
                Some(p) => Some(p.parse().map_err(CliError::config)?),
                None => cfg.provider,
            }
        };
        let temperature_set = g.temperature.or(cfg.temperature).is_some();
        let temperature = g.temperature.or(cfg.temperature).unwrap_or(DEFAULT_TEMPERATURE);
        if !(0.0..=2.0).contains(&temperature) {
            return Err(CliError::config(format!("bad temperature {temperature}")));
        }
        let lexicon = match rel(cfg.lexicon) {
            Some(p) => TraitLexicon::load(&p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
            None => TraitLexicon::builtin(),
        };
        let bank = match rel(cfg.item_bank) {
            Some(p) => MpiItemBank::load_jsonl(&p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
            None => MpiItemBank::builtin(),
        };
        let catalog = match rel(cfg.catalog) {
            Some(p) => TaskCatalog::load(&p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
            None => TaskCatalog::builtin(),
        };
        Ok(Self {
            provider,
            seed: g.seed.or(cfg.seed),
            out: g.out.clone().or(rel(cfg.out)),
            temperature,
            temperature_set,
            model: cfg.model.unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            endpoint: cfg.endpoint,
            max_in_flight: cfg.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT).max(1),
            lexicon,
            bank,
            catalog,
            transcript: g.transcript.clone().or(rel(cfg.transcript)),
            capture: g.capture.clone(),
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Builds the provider stack: the chosen backend behind a validating,
    /// bounded gateway, optionally wrapped in a capture log.
    pub fn provider(&self, kind: ProviderKind, seed: u64) -> Result<Box<dyn ChatProvider>, CliError> {
        self.provider_with(kind, seed, None)
    }

    /// As [`Settings::provider`], with a transcript to fall back on when
    /// none was given on the command line or in the config.
    pub fn provider_with(
        &self,
        kind: ProviderKind,
        seed: u64,
        transcript: Option<&Path>,
    ) -> Result<Box<dyn ChatProvider>, CliError> {
        let base: Box<dyn ChatProvider> = match kind {
            ProviderKind::Mock => Box::new(MockProvider::new(
                seed,
                MockBehaviour::Auto {
                    mpi: answerer_config(&self.lexicon, &self.bank),
                    planner: PlannerConfig::default(),
                },
            )),
            ProviderKind::Scripted => {
                let path = self
                    .transcript
                    .as_deref()
                    .or(transcript)
                    .ok_or_else(|| CliError::config("the scripted provider needs --transcript"))?;
                let t =
                    ScriptedTranscript::load(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                Box::new(MockProvider::new(seed, MockBehaviour::Scripted(t)))
            }
            ProviderKind::Http => {
                let mut cfg = ProviderConfig::from_env();
                if cfg.api_key.is_none() {
                    return Err(CliError::new(
                        EXIT_PROVIDER,
                        format!("{API_KEY_ENV} is not set; export it to use the http provider"),
                    ));
                }
                if let Some(e) = &self.endpoint {
                    cfg.endpoint = e.clone();
                }
                Box::new(HttpProvider::new(cfg)?)
            }
        };
        let bound = if kind == ProviderKind::Http { self.max_in_flight } else { self.max_in_flight.max(8) };
        let gated: Box<dyn ChatProvider> = Box::new(Gateway::new(base, bound));
        match &self.capture {
            None => Ok(gated),
            Some(path) => Ok(Box::new(CaptureProvider::to_file(gated, path).map_err(|e| CliError::io(path, e))?)),
        }
    }
}
