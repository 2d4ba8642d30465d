use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{parse_schedule, RejectReason, Schedule, SchedulerError, TaskCatalog};
use crate::concurrency::fan_out;
use crate::gateway::{ChatProvider, ChatRequest, GatewayError, DEFAULT_MODEL, DEFAULT_TEMPERATURE};
use crate::persona::{PersonaError, PersonaPrompt, TraitLexicon};
use crate::seeding::derive_seed;

pub const DEFAULT_SYSTEM_MESSAGE: &str = "You are a scheduling assistant. Produce a realistic full-day schedule for the described person using only the provided tasks, in the specified format.";

pub const DEFAULT_AGENT_PROFILE: &str = "You work a standard office job and are planning an ordinary weekday.";

/// Prompting knobs shared by every sample of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub system_message: String,
    pub agent_profile: String,
    pub temperature: f64,
    pub model: String,
    pub parallelism: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            system_message: DEFAULT_SYSTEM_MESSAGE.to_string(),
            agent_profile: DEFAULT_AGENT_PROFILE.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            model: DEFAULT_MODEL.to_string(),
            parallelism: 8,
        }
    }
}

/// One experimental arm: a persona plus the two prompt interventions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCondition {
    pub label: String,
    pub persona: PersonaPrompt,
    pub use_system_message: bool,
    pub randomise_order: bool,
}

impl GenerationCondition {
    pub fn new(label: impl Into<String>, persona: PersonaPrompt) -> Self {
        Self { label: label.into(), persona, use_system_message: false, randomise_order: false }
    }

    /// Persona condition labelled like `E+` or `Neutral`.
    pub fn persona(persona: PersonaPrompt) -> Self {
        Self::new(persona.label(), persona)
    }

    pub fn with_system_message(mut self, on: bool) -> Self {
        self.use_system_message = on;
        self
    }

    pub fn with_randomised_order(mut self, on: bool) -> Self {
        self.randomise_order = on;
        self
    }

    /// Baseline, Sys, Rand and Sys & Rand, all without a persona.
    pub fn interventions() -> Vec<Self> {
        let n = PersonaPrompt::neutral;
        vec![
            Self::new("Baseline", n()),
            Self::new("Sys", n()).with_system_message(true),
            Self::new("Rand", n()).with_randomised_order(true),
            Self::new("Sys & Rand", n()).with_system_message(true).with_randomised_order(true),
        ]
    }

    /// Resolves a label: one of the intervention names, `Neutral`, or a
    /// persona label such as `C+`.
    pub fn from_label(label: &str, lexicon: &TraitLexicon) -> Result<Self, PersonaError> {
        let key = label.trim();
        if let Some(c) = Self::interventions().into_iter().find(|c| c.label.eq_ignore_ascii_case(key)) {
            return Ok(c);
        }
        if key.eq_ignore_ascii_case("neutral") || key.eq_ignore_ascii_case("control") {
            return Ok(Self::new("Neutral", PersonaPrompt::neutral()));
        }
        Ok(Self::persona(lexicon.prompt_for_label(key)?))
    }
}

/// Uniform permutation of the catalog's task names.
pub fn randomise_task_order(catalog: &TaskCatalog, seed: u64) -> Vec<String> {
    let mut names: Vec<String> = catalog.names().into_iter().map(String::from).collect();
    names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    names
}

pub fn build_bootstrap_prompt(
    condition: &GenerationCondition,
    task_order: &[String],
    config: &BootstrapConfig,
) -> ChatRequest {
    let mut user = String::new();
    if !condition.persona.is_neutral() {
        user.push_str(&condition.persona.text);
        user.push_str("\n\n");
    }
    if !config.agent_profile.trim().is_empty() {
        user.push_str(config.agent_profile.trim());
        user.push_str("\n\n");
    }
    user.push_str(
        "Plan your schedule for today using only the tasks below. A task may appear more than once or not at all.\n\n",
    );
    user.push_str("Available tasks:\n");
    for t in task_order {
        user.push_str(&format!("- {t}\n"));
    }
    user.push_str(
        "\nRespond with one line per entry in chronological order, in the form HH:MM - HH:MM | TaskName, using 24-hour times.",
    );
    let mut req = ChatRequest::new(user).with_temperature(config.temperature).with_model(config.model.clone());
    if condition.use_system_message {
        req = req.with_system(config.system_message.clone());
    }
    req
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub label: String,
    pub sample_index: usize,
    pub reason: RejectReason,
    pub detail: String,
    pub raw: String,
}

/// Everything produced for one sample, accepted or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub seed: u64,
    pub request: ChatRequest,
    pub task_order: Vec<String>,
    pub raw: String,
    pub latency_ms: u64,
    pub result: Result<Schedule, RejectRecord>,
}

/// Requests and parses one schedule. Failed requests become `Transport`
/// rejects, except authentication and request-validation errors, which no
/// later sample could recover from.
pub fn generate_sample<P: ChatProvider + ?Sized>(
    provider: &P,
    condition: &GenerationCondition,
    catalog: &TaskCatalog,
    index: usize,
    seed: u64,
    config: &BootstrapConfig,
) -> Result<SampleOutcome, SchedulerError> {
    let task_order = if condition.randomise_order {
        randomise_task_order(catalog, seed)
    } else {
        catalog.names().into_iter().map(String::from).collect()
    };
    let request = build_bootstrap_prompt(condition, &task_order, config).with_replicate(seed);
    let reject = |reason, detail: String, raw: &str| RejectRecord {
        label: condition.label.clone(),
        sample_index: index,
        reason,
        detail,
        raw: raw.to_string(),
    };
    let (raw, latency_ms, result) = match provider.complete(&request) {
        Ok(resp) => {
            let result = parse_schedule(&resp.text, catalog).map_err(|r| reject(r.reason, r.detail, &resp.text));
            (resp.text, resp.latency_ms, result)
        }
        Err(e @ (GatewayError::Auth(_) | GatewayError::InvalidRequest(_))) => return Err(SchedulerError::Provider(e)),
        Err(e) => (String::new(), 0, Err(reject(RejectReason::Transport, e.to_string(), ""))),
    };
    Ok(SampleOutcome { index, seed, request, task_order, raw, latency_ms, result })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub schedules: Vec<(usize, Schedule)>,
    pub rejects: Vec<RejectRecord>,
}

impl SampleSet {
    pub fn total(&self) -> usize {
        self.schedules.len() + self.rejects.len()
    }
}

/// `n` samples for one condition. Sample `i` uses the sub-seed
/// `derive_seed(seed, label, i)`.
pub fn generate_samples<P: ChatProvider + ?Sized>(
    provider: &P,
    condition: &GenerationCondition,
    catalog: &TaskCatalog,
    n: usize,
    seed: u64,
    config: &BootstrapConfig,
) -> Result<SampleSet, SchedulerError> {
    if n == 0 {
        return Err(SchedulerError::NoSamples);
    }
    let parallelism = config.parallelism.max(1).min(provider.max_parallelism());
    let outcomes = fan_out(n, parallelism, |i| {
        generate_sample(provider, condition, catalog, i, derive_seed(seed, &condition.label, i as u64), config)
    });
    let mut set = SampleSet::default();
    for o in outcomes {
        let o = o?;
        match o.result {
            Ok(s) => set.schedules.push((o.index, s)),
            Err(r) => set.rejects.push(r),
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockBehaviour, MockProvider, PlannerConfig, ScriptedTranscript};
    use crate::persona::{OceanFactor, TraitDirection};

    fn names(c: &TaskCatalog) -> Vec<String> {
        c.names().into_iter().map(String::from).collect()
    }

    #[test]
    fn permutation_properties() {
        let cat = TaskCatalog::builtin();
        let p = randomise_task_order(&cat, 7);
        assert_eq!(p, randomise_task_order(&cat, 7));
        let mut sorted = p.clone();
        sorted.sort();
        let mut want = names(&cat);
        want.sort();
        assert_eq!(sorted, want);
        let single =
            TaskCatalog::from_toml_str("[[task]]\nname = \"Work\"\nabbreviation = \"W\"\ncategory = \"work\"\n")
                .unwrap();
        assert_eq!(randomise_task_order(&single, 3), ["Work"]);
    }

    #[test]
    fn baseline_prompt() {
        let cat = TaskCatalog::builtin();
        let req =
            build_bootstrap_prompt(&GenerationCondition::interventions()[0], &names(&cat), &BootstrapConfig::default());
        assert!(req.system_message.is_none());
        assert!(!req.user_message.contains("Imagine you are"));
        assert!(req.user_message.contains("Available tasks:\n- Call\n- Coffee\n- Creative\n"));
        assert!(req.user_message.contains(DEFAULT_AGENT_PROFILE));
        assert_eq!(req.temperature, 0.7);
    }

    #[test]
    fn sys_and_persona_prompts() {
        let cat = TaskCatalog::builtin();
        let sys = &GenerationCondition::interventions()[3];
        let req = build_bootstrap_prompt(sys, &names(&cat), &BootstrapConfig::default());
        assert_eq!(req.system_message.as_deref(), Some(DEFAULT_SYSTEM_MESSAGE));
        let e = TraitLexicon::builtin().prompt(OceanFactor::Extraversion, TraitDirection::Positive);
        let req =
            build_bootstrap_prompt(&GenerationCondition::persona(e.clone()), &names(&cat), &BootstrapConfig::default());
        assert!(req.user_message.starts_with(&format!("{}\n\n", e.text)));
        assert!(req.user_message.starts_with("Imagine you are an extraverted person"));
    }

    #[test]
    fn labels_resolve() {
        let lex = TraitLexicon::builtin();
        assert!(GenerationCondition::from_label("sys & rand", &lex).unwrap().randomise_order);
        assert!(GenerationCondition::from_label("Neutral", &lex).unwrap().persona.is_neutral());
        assert_eq!(GenerationCondition::from_label("C+", &lex).unwrap().label, "C+");
        assert!(GenerationCondition::from_label("Q?", &lex).is_err());
    }

    #[test]
    fn mock_planner_is_always_valid() {
        let p = MockProvider::new(4, MockBehaviour::SchedulePlanner(PlannerConfig::default()));
        let cat = TaskCatalog::builtin();
        for cond in GenerationCondition::interventions() {
            let set = generate_samples(&p, &cond, &cat, 50, 1, &BootstrapConfig::default()).unwrap();
            assert_eq!(set.schedules.len(), 50, "{:?}", set.rejects);
        }
    }

    #[test]
    fn one_malformed_transcript_among_ten() {
        let good = "09:00 - 12:00 | Work\n12:00 - 13:00 | Lunch\n";
        let mut texts = vec![good; 10];
        texts[6] = "09:00 - 10:00 | Siesta";
        let p = MockProvider::new(0, MockBehaviour::Scripted(ScriptedTranscript::from_texts(texts)));
        let cond = GenerationCondition::new("Baseline", PersonaPrompt::neutral());
        let set = generate_samples(&p, &cond, &TaskCatalog::builtin(), 10, 0, &BootstrapConfig::default()).unwrap();
        assert_eq!((set.schedules.len(), set.rejects.len()), (9, 1));
        assert_eq!(set.rejects[0].sample_index, 6);
        assert_eq!(set.rejects[0].reason, RejectReason::UnknownTask);
    }

    #[test]
    fn transport_failures_become_rejects() {
        let p = MockProvider::new(0, MockBehaviour::Scripted(ScriptedTranscript::from_texts(["09:00 - 10:00 | Work"])));
        let cond = GenerationCondition::new("Baseline", PersonaPrompt::neutral());
        let set = generate_samples(&p, &cond, &TaskCatalog::builtin(), 3, 0, &BootstrapConfig::default()).unwrap();
        assert_eq!(set.total(), 3);
        assert!(set.rejects.iter().all(|r| r.reason == RejectReason::Transport));
    }
}
