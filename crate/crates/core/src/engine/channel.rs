use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::typing::{simulate_typing, Key, TypingProfile};
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    PlanCreated,
    TaskStarted,
    TaskFinished,
    DayComplete,
    Open,
    Close,
    KeyPress,
    Navigate,
    Note,
}

/// One line of the action log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvent {
    /// Simulated milliseconds since midnight of day 1.
    pub t: u64,
    pub channel: String,
    pub kind: ActionKind,
    pub payload: Value,
}

impl ActionEvent {
    pub fn new(t: u64, channel: &str, kind: ActionKind, payload: Value) -> Self {
        Self { t, channel: channel.to_string(), kind, payload }
    }
}

/// What a channel needs to know about the task it is performing.
#[derive(Debug, Clone)]
pub struct TaskContext<'a> {
    pub day: u32,
    pub slot: usize,
    pub task: &'a str,
    pub duration_min: u32,
    pub typing: &'a TypingProfile,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelOutput {
    pub events: Vec<ActionEvent>,
    /// Name of the document the content was written to, if any.
    pub artifact: Option<String>,
}

/// Turns task content into timed environment actions.
pub trait Channel: Send {
    fn name(&self) -> &str;

    /// Whether the task should get generated content before `perform`.
    fn needs_content(&self) -> bool;

    fn perform(&self, ctx: &TaskContext<'_>, content: &str, start_ms: u64, seed: u64) -> ChannelOutput;
}

/// Records that the task happened, nothing more.
#[derive(Debug, Default)]
pub struct LogChannel;

impl Channel for LogChannel {
    fn name(&self) -> &str {
        "log"
    }

    fn needs_content(&self) -> bool {
        false
    }

    fn perform(&self, ctx: &TaskContext<'_>, _content: &str, start_ms: u64, _seed: u64) -> ChannelOutput {
        let ev = ActionEvent::new(
            start_ms,
            self.name(),
            ActionKind::Note,
            json!({"task": ctx.task, "minutes": ctx.duration_min}),
        );
        ChannelOutput { events: vec![ev], artifact: None }
    }
}

/// Types the content into a simulated text document.
#[derive(Debug, Default)]
pub struct DocumentChannel;

pub fn document_name(day: u32, slot: usize, task: &str) -> String {
    let stem: String =
        task.chars().filter(|c| c.is_alphanumeric() || *c == ' ').collect::<String>().trim().replace(' ', "-");
    format!("day{day}-{slot:02}-{}.txt", stem.to_lowercase())
}

pub fn key_label(k: Key) -> String {
    match k {
        Key::Char(c) => c.to_string(),
        Key::Backspace => "Backspace".to_string(),
    }
}

pub fn parse_key_label(s: &str) -> Option<Key> {
    if s == "Backspace" {
        return Some(Key::Backspace);
    }
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(Key::Char(c)),
        _ => None,
    }
}

impl Channel for DocumentChannel {
    fn name(&self) -> &str {
        "document"
    }

    fn needs_content(&self) -> bool {
        true
    }

    fn perform(&self, ctx: &TaskContext<'_>, content: &str, start_ms: u64, seed: u64) -> ChannelOutput {
        let doc = document_name(ctx.day, ctx.slot, ctx.task);
        let mut events = vec![ActionEvent::new(start_ms, self.name(), ActionKind::Open, json!({"document": doc}))];
        let mut last = start_ms;
        for k in simulate_typing(content, ctx.typing, seed) {
            last = start_ms + k.offset_ms;
            events.push(ActionEvent::new(
                last,
                self.name(),
                ActionKind::KeyPress,
                json!({"document": doc, "key": key_label(k.key)}),
            ));
        }
        events.push(ActionEvent::new(last, self.name(), ActionKind::Close, json!({"document": doc})));
        ChannelOutput { events, artifact: Some(doc) }
    }
}

/// Simulated browsing: opens a browser and visits a few pages spread over
/// the task's duration.
#[derive(Debug, Default)]
pub struct WebChannel;

const SITES: [(&str, &[&str]); 4] = [
    ("media", &["https://social.example.com/feed", "https://video.example.com/trending", "https://news.example.com/"]),
    (
        "reading",
        &["https://news.example.com/world", "https://blog.example.org/longread", "https://wiki.example.org/Random"],
    ),
    (
        "research",
        &[
            "https://search.example.com/?q=quarterly+figures",
            "https://wiki.example.org/Statistics",
            "https://docs.example.org/reference",
        ],
    ),
    ("", &["https://intranet.example.com/", "https://mail.example.com/inbox", "https://search.example.com/"]),
];

impl Channel for WebChannel {
    fn name(&self) -> &str {
        "web"
    }

    fn needs_content(&self) -> bool {
        false
    }

    fn perform(&self, ctx: &TaskContext<'_>, _content: &str, start_ms: u64, seed: u64) -> ChannelOutput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key = ctx.task.to_lowercase();
        let pages = SITES.iter().find(|(k, _)| key.starts_with(k)).map(|(_, p)| *p).unwrap_or(SITES[3].1);
        let visits = rng.random_range(1..=4u64);
        let span = u64::from(ctx.duration_min.max(1)) * 60_000;
        let mut events = vec![ActionEvent::new(start_ms, self.name(), ActionKind::Open, json!({"task": ctx.task}))];
        for i in 0..visits {
            let t = start_ms + span * i / visits + rng.random_range(0..=span / (visits * 4));
            let url = pages[rng.random_range(0..pages.len())];
            events.push(ActionEvent::new(t, self.name(), ActionKind::Navigate, json!({"url": url})));
        }
        let end = events.last().map_or(start_ms, |e| e.t);
        events.push(ActionEvent::new(end, self.name(), ActionKind::Close, json!({"task": ctx.task})));
        ChannelOutput { events, artifact: None }
    }
}

/// Registered channels and the task → channel routing table.
pub struct ChannelSet {
    channels: BTreeMap<String, Box<dyn Channel>>,
    routes: BTreeMap<String, String>,
    fallback: Option<String>,
}

impl ChannelSet {
    pub fn empty() -> Self {
        Self { channels: BTreeMap::new(), routes: BTreeMap::new(), fallback: None }
    }

    /// Log, document and web channels. Writing tasks go to the document
    /// channel, browsing tasks to the web channel, everything else is logged.
    pub fn standard() -> Self {
        let mut set = Self::empty();
        set.register(Box::new(LogChannel));
        set.register(Box::new(DocumentChannel));
        set.register(Box::new(WebChannel));
        for t in ["Email", "Creative", "Plan", "Reflect", "Work"] {
            set.route(t, "document");
        }
        for t in ["Media", "Reading", "Research"] {
            set.route(t, "web");
        }
        set.fallback = Some("log".into());
        set
    }

    pub fn register(&mut self, channel: Box<dyn Channel>) {
        self.channels.insert(channel.name().to_string(), channel);
    }

    pub fn route(&mut self, task: &str, channel: &str) {
        self.routes.insert(task.to_lowercase(), channel.to_string());
    }

    pub fn set_fallback(&mut self, channel: Option<&str>) {
        self.fallback = channel.map(String::from);
    }

    pub fn channel_for(&self, task: &str) -> Result<&dyn Channel, EngineError> {
        let name = self
            .routes
            .get(&task.to_lowercase())
            .or(self.fallback.as_ref())
            .ok_or_else(|| EngineError::ChannelUnbound(task.to_string()))?;
        self.channels.get(name).map(|c| c.as_ref()).ok_or_else(|| EngineError::ChannelUnbound(task.to_string()))
    }
}

impl Default for ChannelSet {
    fn default() -> Self {
        Self::standard()
    }
}
