//! Seeded, offline providers.
//!
//! Every answer is a pure function of `(seed, request)`: the request is hashed
//! with the seed into a ChaCha8 stream, so concurrent and repeated calls agree.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::capture::ScriptedTranscript;
use super::{ChatProvider, ChatRequest, ChatResponse, GatewayError};
use crate::persona::OceanFactor;

/// Persona cue word and the pole it signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitCue {
    pub word: String,
    pub factor: OceanFactor,
    /// +1 for the positive pole, -1 for the negative pole.
    pub sign: f64,
}

/// Inventory statement and how it is keyed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCue {
    pub statement: String,
    pub factor: OceanFactor,
    pub positively_keyed: bool,
}

/// Answers inventory prompts with a letter A–E.
///
/// The latent endorsement for an item's factor starts at `baseline` and moves
/// by `strength` toward whichever pole the persona cues in the prompt signal;
/// Gaussian `noise` is added before rounding onto the 1–5 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpiAnswererConfig {
    pub cues: Vec<TraitCue>,
    pub items: Vec<ItemCue>,
    pub baseline: f64,
    pub strength: f64,
    pub noise: f64,
    /// Answer this letter to everything.
    pub constant: Option<char>,
}

impl Default for MpiAnswererConfig {
    fn default() -> Self {
        Self { cues: vec![], items: vec![], baseline: 3.2, strength: 1.5, noise: 0.9, constant: None }
    }
}

impl MpiAnswererConfig {
    pub fn constant(letter: char) -> Self {
        Self { constant: Some(letter.to_ascii_uppercase()), ..Self::default() }
    }
}

/// Persona cue that lengthens (or shortens) a task in generated schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerCue {
    pub word: String,
    pub task: String,
    pub shift_minutes: f64,
}

/// Emits `HH:MM - HH:MM | Task` schedules over the tasks listed in the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub cues: Vec<PlannerCue>,
    /// Std-dev, in list positions, of the jitter applied to presented order.
    pub order_noise: f64,
    /// Std-dev of task durations around their base length, in minutes.
    pub duration_noise: f64,
    pub skip_probability: f64,
    pub repeat_probability: f64,
    /// Extra order jitter when a system message is present.
    pub system_order_noise: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let cue = |w: &str, t: &str, s: f64| PlannerCue { word: w.into(), task: t.into(), shift_minutes: s };
        Self {
            cues: vec![
                cue("organised", "Work", 20.0),
                cue("disciplined", "Work", 5.0),
                cue("disorganised", "Break", 10.0),
                cue("negligent", "Media", 10.0),
                cue("outgoing", "Meeting", 10.0),
                cue("energetic", "Exercise", 10.0),
                cue("public", "Call", 5.0),
                cue("reserved", "Meeting", -10.0),
                cue("private", "Reading", 10.0),
                cue("curious", "Research", 10.0),
                cue("imaginative", "Creative", 10.0),
                cue("kind", "Collab.", 10.0),
                cue("critical", "Collab.", -10.0),
                cue("anxious", "Break", 10.0),
                cue("moody", "Personal", 10.0),
                cue("calm", "Reflect", 5.0),
            ],
            order_noise: 1.5,
            duration_noise: 12.0,
            skip_probability: 0.03,
            repeat_probability: 0.03,
            system_order_noise: 2.5,
        }
    }
}

#[derive(Debug)]
pub enum MockBehaviour {
    MpiAnswerer(MpiAnswererConfig),
    SchedulePlanner(PlannerConfig),
    /// Free-text task content for generators.
    Writer,
    /// Routes by prompt shape: inventory prompts to the answerer, prompts
    /// carrying a task list to the planner, everything else to the writer.
    Auto {
        mpi: MpiAnswererConfig,
        planner: PlannerConfig,
    },
    Scripted(ScriptedTranscript),
}

pub struct MockProvider {
    seed: u64,
    behaviour: MockBehaviour,
}

impl MockProvider {
    pub fn new(seed: u64, behaviour: MockBehaviour) -> Self {
        Self { seed, behaviour }
    }

    pub fn auto(seed: u64) -> Self {
        Self::new(seed, MockBehaviour::Auto { mpi: MpiAnswererConfig::default(), planner: PlannerConfig::default() })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng_for(&self, request: &ChatRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        if let Some(s) = &request.system_message {
            h.update([1u8]);
            h.update(s.as_bytes());
        }
        h.update([0u8]);
        h.update(request.user_message.as_bytes());
        h.update([0u8]);
        h.update(request.temperature.to_bits().to_le_bytes());
        h.update(request.model_id.as_bytes());
        h.update(request.max_tokens.unwrap_or(0).to_le_bytes());
        h.update(request.replicate.to_le_bytes());
        h.update(request.attempt.to_le_bytes());
        let digest = h.finalize();
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&digest[..32]);
        ChaCha8Rng::from_seed(bytes)
    }
}

const MPI_MARKER: &str = "(A). Very Accurate";
const TASK_LIST_HEADER: &str = "Available tasks:";

impl ChatProvider for MockProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let text = match &self.behaviour {
            MockBehaviour::Scripted(t) => return t.next_response(request),
            MockBehaviour::MpiAnswerer(cfg) => answer_mpi(cfg, request, &mut self.rng_for(request)),
            MockBehaviour::SchedulePlanner(cfg) => plan_schedule(cfg, request, &mut self.rng_for(request)),
            MockBehaviour::Writer => write_content(request, &mut self.rng_for(request)),
            MockBehaviour::Auto { mpi, planner } => {
                let mut rng = self.rng_for(request);
                if request.user_message.contains(MPI_MARKER) {
                    answer_mpi(mpi, request, &mut rng)
                } else if request.user_message.contains(TASK_LIST_HEADER) {
                    plan_schedule(planner, request, &mut rng)
                } else {
                    write_content(request, &mut rng)
                }
            }
        };
        let prompt_tokens = word_count(&request.user_message) + request.system_message.as_deref().map_or(0, word_count);
        let completion_tokens = word_count(&text);
        Ok(ChatResponse { latency_ms: 40 + 3 * completion_tokens as u64, text, prompt_tokens, completion_tokens })
    }

    fn max_parallelism(&self) -> usize {
        match self.behaviour {
            MockBehaviour::Scripted(_) => 1,
            _ => usize::MAX,
        }
    }
}

fn word_count(s: &str) -> u32 {
    s.split_whitespace().count() as u32
}

/// Case-insensitive phrase search on word boundaries, so `organised` does not
/// fire inside `disorganised`.
fn contains_phrase(haystack_lower: &str, phrase: &str) -> bool {
    let needle = phrase.to_lowercase();
    if needle.is_empty() {
        return false;
    }
    let is_word = |c: char| c.is_alphanumeric() || c == '-';
    haystack_lower.match_indices(&needle).any(|(i, m)| {
        let before = haystack_lower[..i].chars().next_back();
        let after = haystack_lower[i + m.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}

fn persona_section(prompt: &str) -> String {
    prompt.lines().filter(|l| l.contains("Imagine you are")).collect::<Vec<_>>().join("\n").to_lowercase()
}

const LIKERT: [&str; 5] = [
    "(A). Very Accurate",
    "(B). Moderately Accurate",
    "(C). Neither Accurate Nor Inaccurate",
    "(D). Moderately Inaccurate",
    "(E). Very Inaccurate",
];

fn answer_mpi(cfg: &MpiAnswererConfig, request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
    if let Some(letter) = cfg.constant {
        let idx = (letter as u8).saturating_sub(b'A').min(4) as usize;
        return LIKERT[idx].to_string();
    }
    let prompt = request.user_message.to_lowercase();
    let quoted = prompt
        .split("\"you ")
        .nth(1)
        .and_then(|rest| rest.split('"').next())
        .map(|s| s.trim_end_matches('.').trim().to_string());
    let item = cfg
        .items
        .iter()
        .find(|it| quoted.as_deref() == Some(it.statement.to_lowercase().trim_end_matches('.')))
        .or_else(|| {
            cfg.items
                .iter()
                .filter(|it| prompt.contains(&it.statement.to_lowercase()))
                .max_by_key(|it| it.statement.len())
        });
    let Some(item) = item else {
        return LIKERT[rng.random_range(0..5)].to_string();
    };

    let persona = persona_section(&request.user_message);
    let signs: Vec<f64> = cfg
        .cues
        .iter()
        .filter(|c| c.factor == item.factor && contains_phrase(&persona, &c.word))
        .map(|c| c.sign)
        .collect();
    let pull = if signs.is_empty() { 0.0 } else { signs.iter().sum::<f64>() / signs.len() as f64 };
    let level = cfg.baseline + cfg.strength * pull;
    let noise = Normal::new(0.0, cfg.noise.max(1e-9)).expect("finite noise").sample(rng);
    let score = (level + noise).round().clamp(1.0, 5.0) as usize;
    // positive keying: A = 5 ... E = 1; negative keying reverses
    let idx = if item.positively_keyed { 5 - score } else { score - 1 };
    LIKERT[idx].to_string()
}

fn listed_tasks(prompt: &str) -> Vec<String> {
    let mut lines = prompt.lines().skip_while(|l| !l.trim_start().starts_with(TASK_LIST_HEADER));
    lines.next();
    lines
        .map(str::trim)
        .take_while(|l| !l.is_empty())
        .filter_map(|l| l.strip_prefix("- ").map(|t| t.trim().to_string()))
        .collect()
}

fn base_minutes(task: &str) -> f64 {
    match task.to_lowercase().as_str() {
        "work" => 90.0,
        "lunch" => 60.0,
        "meeting" | "research" | "creative" | "collab." => 50.0,
        "coffee" | "break" => 20.0,
        _ => 40.0,
    }
}

fn plan_schedule(cfg: &PlannerConfig, request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
    let tasks = listed_tasks(&request.user_message);
    if tasks.is_empty() {
        return "I could not find any tasks to schedule.".to_string();
    }
    let persona = persona_section(&request.user_message);
    let mut shifts: BTreeMap<String, f64> = BTreeMap::new();
    for cue in &cfg.cues {
        if contains_phrase(&persona, &cue.word) {
            *shifts.entry(cue.task.to_lowercase()).or_default() += cue.shift_minutes;
        }
    }
    let order_sd = cfg.order_noise + if request.system_message.is_some() { cfg.system_order_noise } else { 0.0 };
    let order_noise = Normal::new(0.0, order_sd.max(1e-9)).expect("finite");
    let dur_noise = Normal::new(0.0, cfg.duration_noise.max(1e-9)).expect("finite");

    let mut keyed: Vec<(f64, String)> = Vec::with_capacity(tasks.len() + 2);
    for (i, task) in tasks.iter().enumerate() {
        if rng.random::<f64>() < cfg.skip_probability {
            continue;
        }
        let key = if task.eq_ignore_ascii_case("lunch") {
            4.5 + 0.4 * order_noise.sample(rng) / order_sd.max(1e-9)
        } else {
            i as f64 + order_noise.sample(rng)
        };
        keyed.push((key, task.clone()));
        if rng.random::<f64>() < cfg.repeat_probability {
            keyed.push((key + 3.0 + order_noise.sample(rng).abs(), task.clone()));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut t = 7 * 60 + 30 + 15 * rng.random_range(0..5u32);
    let mut out = String::new();
    for (_, task) in keyed {
        let shift = shifts.get(&task.to_lowercase()).copied().unwrap_or(0.0);
        let mins = (base_minutes(&task) + shift + dur_noise.sample(rng)).max(5.0);
        let mins = ((mins / 5.0).round() * 5.0) as u32;
        if t + mins > 23 * 60 + 30 {
            break;
        }
        out.push_str(&format!("{} - {} | {}\n", hhmm(t), hhmm(t + mins), task));
        t += mins;
        if rng.random::<f64>() < 0.2 {
            t += 5;
        }
    }
    out
}

fn hhmm(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

const FRAGMENTS: [&str; 12] = [
    "I went back over the notes from yesterday before starting.",
    "The main points still need a second pass.",
    "Following up on the open questions from the last meeting.",
    "A short summary of progress so far is below.",
    "Most of the remaining work is straightforward.",
    "I will check the figures again before sending anything out.",
    "There are a couple of loose ends worth tidying up.",
    "The draft is shaping up better than expected.",
    "Next step is to confirm the timeline with the team.",
    "Some of this may change after the review.",
    "Keeping this brief so it is easy to skim.",
    "Flagging one risk that could slow things down.",
];

fn write_content(request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
    let topic = request
        .user_message
        .lines()
        .find_map(|l| l.trim().strip_prefix("Task:"))
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "today".to_string());
    let n = rng.random_range(2..5);
    let mut parts = vec![format!("Notes on {topic}.")];
    for _ in 0..n {
        parts.push(FRAGMENTS[rng.random_range(0..FRAGMENTS.len())].to_string());
    }
    parts.join(" ")
}
