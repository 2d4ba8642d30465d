//! Agent runtime: a sequential decision loop over a generated day plan.
//!
//! The agent bootstraps a schedule through the planner prompt, then walks the
//! task list in slot order. Each task is routed to a [`Channel`] which turns
//! generated content into timed [`ActionEvent`]s on a simulated clock. The
//! action log carries lifecycle events too, so [`replay`] can rebuild the
//! final state from the log alone.

mod channel;
mod memory;
mod replay;
mod typing;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::gateway::{ChatProvider, ChatRequest, GatewayError};
use crate::persona::{PersonaPrompt, TraitLexicon};
use crate::scheduler::{
    generate_sample, hhmm, BootstrapConfig, GenerationCondition, RejectReason, SchedulerError, TaskCatalog, TaskDef,
};
use crate::seeding::derive_seed;

pub use channel::{
    document_name, key_label, parse_key_label, ActionEvent, ActionKind, Channel, ChannelOutput, ChannelSet,
    DocumentChannel, LogChannel, TaskContext, WebChannel,
};
pub use memory::{
    EpisodicEvent, EpisodicKind, EpisodicMemory, MemoryStores, ProceduralMemory, SemanticMemory, WorkingMemory,
};
pub use replay::{read_action_log, replay, AgentState, TaskState};
pub use typing::{reconstruct, simulate_typing, Key, Keystroke, TypingProfile};

const MS_PER_MIN: u64 = 60_000;
const MS_PER_DAY: u64 = 24 * 60 * MS_PER_MIN;
const AGENT_CHANNEL: &str = "agent";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no valid schedule after {attempts} attempts ({reasons:?})")]
    BootstrapFailed { attempts: u32, reasons: Vec<RejectReason> },
    #[error("no channel bound for task `{0}`")]
    ChannelUnbound(String),
    #[error("task in slot {slot} cannot move from {from:?} to {to:?}")]
    InvalidTransition { slot: usize, from: TaskStatus, to: TaskStatus },
    #[error("no task in slot {0}")]
    UnknownSlot(usize),
    #[error("provider error: {0}")]
    Provider(GatewayError),
    #[error("invalid agent profile: {0}")]
    Profile(String),
    #[error("replay failed: {0}")]
    Replay(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<SchedulerError> for EngineError {
    fn from(e: SchedulerError) -> Self {
        match e {
            SchedulerError::Provider(g) => EngineError::Provider(g),
            other => EngineError::Profile(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub name: String,
    pub role: String,
    pub biography: String,
    pub persona: PersonaPrompt,
    pub typing: Option<TypingProfile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileFile {
    name: String,
    role: String,
    #[serde(default)]
    biography: String,
    /// Persona label such as `C+`; `Neutral` when absent.
    #[serde(default)]
    condition: Option<String>,
    #[serde(default)]
    typing: Option<TypingProfile>,
}

impl AgentProfile {
    pub fn new(name: impl Into<String>, role: impl Into<String>, persona: PersonaPrompt) -> Self {
        Self { name: name.into(), role: role.into(), biography: String::new(), persona, typing: None }
    }

    /// Parses a TOML profile, resolving `condition` against `lexicon`.
    pub fn from_toml_str(s: &str, lexicon: &TraitLexicon) -> Result<Self, EngineError> {
        let f: ProfileFile = toml::from_str(s).map_err(|e| EngineError::Profile(e.to_string()))?;
        if f.name.trim().is_empty() || f.role.trim().is_empty() {
            return Err(EngineError::Profile("name and role must be non-empty".into()));
        }
        let persona = match f.condition.as_deref().map(str::trim) {
            None | Some("") => PersonaPrompt::neutral(),
            Some(l) if l.eq_ignore_ascii_case("neutral") => PersonaPrompt::neutral(),
            Some(l) => lexicon.prompt_for_label(l).map_err(|e| EngineError::Profile(e.to_string()))?,
        };
        if let Some(t) = &f.typing {
            t.validate()?;
        }
        Ok(Self { name: f.name, role: f.role, biography: f.biography, persona, typing: f.typing })
    }

    pub fn load(path: &Path, lexicon: &TraitLexicon) -> Result<Self, EngineError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, lexicon)
    }

    pub fn to_toml_string(&self) -> String {
        let f = ProfileFile {
            name: self.name.clone(),
            role: self.role.clone(),
            biography: self.biography.clone(),
            condition: Some(self.persona.label()),
            typing: self.typing.clone(),
        };
        toml::to_string(&f).expect("profile serialises")
    }

    /// Self-description stored in semantic memory.
    pub fn semantic_profile(&self) -> String {
        let mut s = format!("Your name is {} and you work as {}.", self.name, self.role);
        if !self.biography.trim().is_empty() {
            s.push(' ');
            s.push_str(self.biography.trim());
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskStatus {
    Pending,
    Active,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub def: TaskDef,
    /// 1-based position in the day plan.
    pub slot: usize,
    pub start_min: u32,
    pub duration_min: u32,
    pub status: TaskStatus,
    pub generated_content: Option<String>,
    pub artifact: Option<String>,
    pub failure: Option<String>,
}

impl TaskInstance {
    fn advance(&mut self, to: TaskStatus) -> Result<(), EngineError> {
        let ok = matches!(
            (self.status, to),
            (TaskStatus::Pending, TaskStatus::Active) | (TaskStatus::Active, TaskStatus::Done)
        );
        if !ok {
            return Err(EngineError::InvalidTransition { slot: self.slot, from: self.status, to });
        }
        self.status = to;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskList {
    tasks: Vec<TaskInstance>,
}

impl TaskList {
    pub fn tasks(&self) -> &[TaskInstance] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn count(&self, status: TaskStatus) -> usize {
        self.tasks.iter().filter(|t| t.status == status).count()
    }

    pub fn get(&self, slot: usize) -> Option<&TaskInstance> {
        slot.checked_sub(1).and_then(|i| self.tasks.get(i))
    }

    fn get_mut(&mut self, slot: usize) -> Result<&mut TaskInstance, EngineError> {
        slot.checked_sub(1).and_then(|i| self.tasks.get_mut(i)).ok_or(EngineError::UnknownSlot(slot))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Task(usize),
    DayComplete,
}

/// Virtual time in milliseconds. `speed` scales real sleeping: 0 runs as
/// fast as possible, 1 sleeps one real second per simulated second.
#[derive(Debug, Clone)]
pub struct SimClock {
    now_ms: u64,
    speed: f64,
}

impl SimClock {
    pub fn new(speed: f64) -> Self {
        Self { now_ms: 0, speed: if speed.is_finite() { speed.max(0.0) } else { 0.0 } }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn advance_to(&mut self, t_ms: u64) {
        if t_ms > self.now_ms {
            if self.speed > 0.0 {
                std::thread::sleep(Duration::from_secs_f64((t_ms - self.now_ms) as f64 / 1000.0 * self.speed));
            }
            self.now_ms = t_ms;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub bootstrap: BootstrapConfig,
    pub use_system_message: bool,
    pub randomise_order: bool,
    /// Planner attempts before giving up on the day.
    pub bootstrap_attempts: u32,
    pub speed: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            bootstrap: BootstrapConfig::default(),
            use_system_message: false,
            randomise_order: false,
            bootstrap_attempts: 3,
            speed: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySummary {
    pub day: u32,
    pub tasks: usize,
    pub failures: usize,
    pub events: usize,
}

/// One simulated user. Single-threaded by design; run several agents on
/// separate threads if needed.
pub struct Agent<'p, P: ChatProvider + ?Sized> {
    profile: AgentProfile,
    memory: MemoryStores,
    tasks: TaskList,
    channels: ChannelSet,
    provider: &'p P,
    clock: SimClock,
    config: AgentConfig,
    seed: u64,
    day: u32,
    day_complete: bool,
    log: Vec<ActionEvent>,
    documents: BTreeMap<String, String>,
    sink: Option<Box<dyn Write + Send + 'p>>,
}

impl<'p, P: ChatProvider + ?Sized> Agent<'p, P> {
    pub fn new(profile: AgentProfile, provider: &'p P, config: AgentConfig, seed: u64) -> Result<Self, EngineError> {
        let mut memory = MemoryStores::default();
        memory.semantic.profile = profile.semantic_profile();
        if let Some(t) = &profile.typing {
            t.validate()?;
            memory.procedural.typing = t.clone();
        }
        memory.procedural.typing.validate()?;
        Ok(Self {
            clock: SimClock::new(config.speed),
            profile,
            memory,
            tasks: TaskList::default(),
            channels: ChannelSet::standard(),
            provider,
            config,
            seed,
            day: 0,
            day_complete: false,
            log: Vec::new(),
            documents: BTreeMap::new(),
            sink: None,
        })
    }

    pub fn with_channels(mut self, channels: ChannelSet) -> Self {
        self.channels = channels;
        self
    }

    /// Streams every action event as a JSONL line while the agent runs.
    pub fn with_sink(mut self, sink: Box<dyn Write + Send + 'p>) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    pub fn memory(&self) -> &MemoryStores {
        &self.memory
    }

    pub fn tasks(&self) -> &TaskList {
        &self.tasks
    }

    pub fn action_log(&self) -> &[ActionEvent] {
        &self.log
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    fn day_base(&self) -> u64 {
        u64::from(self.day.saturating_sub(1)) * MS_PER_DAY
    }

    fn emit(&mut self, ev: ActionEvent) -> Result<(), EngineError> {
        let t = ev.t.max(self.clock.now_ms());
        let ev = ActionEvent { t, ..ev };
        self.clock.advance_to(t);
        if let Some(sink) = self.sink.as_mut() {
            writeln!(sink, "{}", serde_json::to_string(&ev).expect("event serialises"))?;
            sink.flush()?;
        }
        self.log.push(ev);
        Ok(())
    }

    fn remember(&mut self, kind: EpisodicKind) {
        self.memory.episodic.append(EpisodicEvent { t_ms: self.clock.now_ms(), kind });
    }

    /// Plans the next day and replaces the task list with its entries, all
    /// Pending. Rejected plans are retried with fresh sub-seeds.
    pub fn bootstrap(&mut self, catalog: &TaskCatalog) -> Result<&TaskList, EngineError> {
        self.day += 1;
        self.day_complete = false;
        let condition = GenerationCondition::persona(self.profile.persona.clone())
            .with_system_message(self.config.use_system_message)
            .with_randomised_order(self.config.randomise_order);
        let bootstrap =
            BootstrapConfig { agent_profile: self.memory.semantic.render(), ..self.config.bootstrap.clone() };

        let attempts = self.config.bootstrap_attempts.max(1);
        let mut reasons = Vec::new();
        let mut schedule = None;
        for attempt in 0..attempts {
            let seed = derive_seed(self.seed, "bootstrap", (u64::from(self.day) << 8) | u64::from(attempt));
            let outcome = generate_sample(self.provider, &condition, catalog, attempt as usize, seed, &bootstrap)?;
            match outcome.result {
                Ok(s) => {
                    schedule = Some(s);
                    break;
                }
                Err(r) => {
                    tracing::debug!(attempt, reason = %r.reason, detail = %r.detail, "plan rejected");
                    reasons.push(r.reason);
                }
            }
        }
        let schedule = schedule.ok_or(EngineError::BootstrapFailed { attempts, reasons })?;

        let mut tasks = Vec::with_capacity(schedule.len());
        for (i, e) in schedule.entries().iter().enumerate() {
            let def = catalog.resolve(&e.task).cloned().expect("parsed schedules only name catalog tasks");
            tasks.push(TaskInstance {
                def,
                slot: i + 1,
                start_min: e.start,
                duration_min: e.duration,
                status: TaskStatus::Pending,
                generated_content: None,
                artifact: None,
                failure: None,
            });
        }
        self.tasks = TaskList { tasks };

        let plan: Vec<_> = self
            .tasks
            .tasks
            .iter()
            .map(|t| json!({"slot": t.slot, "task": t.def.name, "start": t.start_min, "duration": t.duration_min}))
            .collect();
        self.emit(ActionEvent::new(
            self.day_base(),
            AGENT_CHANNEL,
            ActionKind::PlanCreated,
            json!({"day": self.day, "tasks": plan}),
        ))?;
        let names = self.tasks.tasks.iter().map(|t| t.def.name.clone()).collect();
        self.remember(EpisodicKind::PlanCreated { day: self.day, tasks: names });
        Ok(&self.tasks)
    }

    /// Picks the next Pending task in slot order and makes it Active.
    pub fn decision_step(&mut self) -> Result<Decision, EngineError> {
        self.memory.working.clear();
        let Some(slot) = self.tasks.tasks.iter().find(|t| t.status == TaskStatus::Pending).map(|t| t.slot) else {
            if !self.day_complete {
                self.day_complete = true;
                let t = self.clock.now_ms();
                self.emit(ActionEvent::new(t, AGENT_CHANNEL, ActionKind::DayComplete, json!({"day": self.day})))?;
            }
            return Ok(Decision::DayComplete);
        };
        let base = self.day_base();
        let task = self.tasks.get_mut(slot)?;
        task.advance(TaskStatus::Active)?;
        let (name, start, duration) = (task.def.name.clone(), task.start_min, task.duration_min);

        let w = &mut self.memory.working;
        w.set("task", name.clone());
        w.set("slot", slot.to_string());
        w.set("start", hhmm(start));
        w.set("end", hhmm(start + duration));

        let t = base + u64::from(start) * MS_PER_MIN;
        self.emit(ActionEvent::new(t, AGENT_CHANNEL, ActionKind::TaskStarted, json!({"slot": slot, "task": name})))?;
        self.remember(EpisodicKind::TaskStarted { slot, task: name });
        Ok(Decision::Task(slot))
    }

    fn generator_request(&self, task: &TaskInstance) -> ChatRequest {
        let mut prompt = String::new();
        if !self.profile.persona.is_neutral() {
            prompt.push_str(&self.profile.persona.text);
            prompt.push_str("\n\n");
        }
        prompt.push_str(&self.memory.semantic.render());
        prompt.push_str("\n\n");
        let recent = self.memory.episodic.recent(self.memory.procedural.history_window);
        if !recent.is_empty() {
            prompt.push_str("Recent activity:\n");
            for e in recent {
                prompt.push_str(&format!("- {}\n", e.describe()));
            }
            prompt.push('\n');
        }
        prompt.push_str(&format!("Task: {}\n", task.def.name));
        prompt.push_str(&format!(
            "Scheduled: {} - {}\n\n",
            hhmm(task.start_min),
            hhmm(task.start_min + task.duration_min)
        ));
        prompt.push_str(&self.memory.procedural.generator_instruction);
        let b = &self.config.bootstrap;
        ChatRequest::new(prompt)
            .with_temperature(b.temperature)
            .with_model(b.model.clone())
            .with_max_tokens(self.memory.procedural.max_content_tokens)
            .with_replicate(derive_seed(self.seed, "content", (u64::from(self.day) << 16) | task.slot as u64))
    }

    /// Performs the Active task in `slot` through its channel and marks it
    /// Done. A generator failure is recorded on the task and the day goes on.
    pub fn execute_task(&mut self, slot: usize) -> Result<Vec<ActionEvent>, EngineError> {
        let task = self.tasks.get(slot).ok_or(EngineError::UnknownSlot(slot))?.clone();
        if task.status != TaskStatus::Active {
            return Err(EngineError::InvalidTransition { slot, from: task.status, to: TaskStatus::Done });
        }
        let channel = self.channels.channel_for(&task.def.name)?;
        let mut failure = None;
        let content = if channel.needs_content() {
            match self.provider.complete(&self.generator_request(&task)) {
                Ok(r) => r.text.trim().to_string(),
                Err(e) => {
                    tracing::warn!(slot, task = %task.def.name, "content generation failed: {e}");
                    failure = Some(e.to_string());
                    String::new()
                }
            }
        } else {
            String::new()
        };
        let ctx = TaskContext {
            day: self.day,
            slot,
            task: &task.def.name,
            duration_min: task.duration_min,
            typing: &self.memory.procedural.typing,
        };
        let seed = derive_seed(self.seed, "channel", (u64::from(self.day) << 16) | slot as u64);
        let out = channel.perform(&ctx, &content, self.clock.now_ms(), seed);

        let first = self.log.len();
        for ev in out.events {
            self.emit(ev)?;
        }
        let end = self.day_base() + u64::from(task.start_min + task.duration_min) * MS_PER_MIN;
        let name = task.def.name.clone();
        self.emit(ActionEvent::new(
            end,
            AGENT_CHANNEL,
            ActionKind::TaskFinished,
            json!({"slot": slot, "task": name, "failure": failure}),
        ))?;

        if let Some(doc) = &out.artifact {
            self.documents.insert(doc.clone(), content.clone());
        }
        let t = self.tasks.get_mut(slot)?;
        t.advance(TaskStatus::Done)?;
        t.generated_content = (!content.is_empty()).then_some(content);
        t.artifact = out.artifact;
        t.failure = failure.clone();
        self.remember(EpisodicKind::TaskFinished { slot, task: name, failure });
        Ok(self.log[first..].to_vec())
    }

    /// Bootstraps and runs one full day.
    pub fn run_day(&mut self, catalog: &TaskCatalog) -> Result<DaySummary, EngineError> {
        let first = self.log.len();
        self.bootstrap(catalog)?;
        while let Decision::Task(slot) = self.decision_step()? {
            self.execute_task(slot)?;
        }
        Ok(DaySummary {
            day: self.day,
            tasks: self.tasks.len(),
            failures: self.tasks.tasks.iter().filter(|t| t.failure.is_some()).count(),
            events: self.log.len() - first,
        })
    }

    /// The state a replay of the action log should reproduce.
    pub fn snapshot(&self) -> AgentState {
        AgentState {
            day: self.day,
            tasks: self
                .tasks
                .tasks
                .iter()
                .map(|t| TaskState { slot: t.slot, task: t.def.name.clone(), status: t.status })
                .collect(),
            documents: self.documents.clone(),
            day_complete: self.day_complete,
            last_t: self.log.last().map_or(0, |e| e.t),
        }
    }

    pub fn action_log_jsonl(&self) -> String {
        self.log.iter().map(|e| serde_json::to_string(e).expect("event serialises") + "\n").collect()
    }
}
