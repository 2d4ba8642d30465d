use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TypingProfile;

/// Self-knowledge: the rendered profile plus free-form facts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticMemory {
    pub profile: String,
    pub facts: BTreeMap<String, String>,
}

impl SemanticMemory {
    pub fn render(&self) -> String {
        let mut s = self.profile.clone();
        for (k, v) in &self.facts {
            s.push_str(&format!("\n{k}: {v}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpisodicKind {
    PlanCreated { day: u32, tasks: Vec<String> },
    TaskStarted { slot: usize, task: String },
    TaskFinished { slot: usize, task: String, failure: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodicEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: EpisodicKind,
}

impl EpisodicEvent {
    /// One-line summary used in generator prompts.
    pub fn describe(&self) -> String {
        let at = crate::scheduler::hhmm((self.t_ms / 60_000) as u32);
        match &self.kind {
            EpisodicKind::PlanCreated { tasks, .. } => format!("{at} planned the day: {}", tasks.join(", ")),
            EpisodicKind::TaskStarted { task, .. } => format!("{at} started {task}"),
            EpisodicKind::TaskFinished { task, failure: None, .. } => format!("{at} finished {task}"),
            EpisodicKind::TaskFinished { task, failure: Some(f), .. } => format!("{at} gave up on {task} ({f})"),
        }
    }
}

/// Append-only event history. There is no way to edit or remove entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodicMemory {
    events: Vec<EpisodicEvent>,
}

impl EpisodicMemory {
    pub fn append(&mut self, event: EpisodicEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[EpisodicEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn recent(&self, k: usize) -> &[EpisodicEvent] {
        &self.events[self.events.len().saturating_sub(k)..]
    }

    pub fn to_jsonl(&self) -> String {
        self.events.iter().map(|e| serde_json::to_string(e).expect("event serialises") + "\n").collect()
    }
}

/// Templates and behaviour parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProceduralMemory {
    /// Instruction appended to generator prompts.
    pub generator_instruction: String,
    pub typing: TypingProfile,
    /// Episodic events quoted in generator prompts.
    pub history_window: usize,
    pub max_content_tokens: u32,
}

impl Default for ProceduralMemory {
    fn default() -> Self {
        Self {
            generator_instruction: "Write the text you would type while doing this task. Reply with the text only."
                .to_string(),
            typing: TypingProfile::default(),
            history_window: 5,
            max_content_tokens: 300,
        }
    }
}

/// Per-cycle scratch, cleared at the start of every decision step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkingMemory {
    entries: BTreeMap<String, String>,
}

impl WorkingMemory {
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryStores {
    pub semantic: SemanticMemory,
    pub episodic: EpisodicMemory,
    pub procedural: ProceduralMemory,
    pub working: WorkingMemory,
}
