use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{SchedulerError, TaskCatalog};
use crate::stats::END_OF_DAY;

pub const MINUTES_PER_DAY: u32 = 24 * 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub task: String,
    /// Minutes from midnight.
    pub start: u32,
    pub duration: u32,
}

impl ScheduleEntry {
    pub fn end(&self) -> u32 {
        self.start + self.duration
    }

    /// `HH:MM - HH:MM | Task`
    pub fn to_line(&self) -> String {
        format!("{} - {} | {}", hhmm(self.start), hhmm(self.end()), self.task)
    }
}

pub fn hhmm(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// A validated day plan: sorted by start, non-overlapping, every duration
/// positive and inside the day. The end-of-day marker is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonlLine {
    End { end: bool },
    Entry { task: String, start_min: u32, duration_min: u32 },
}

impl Schedule {
    /// Sorts by start time and checks the invariants.
    pub fn new(mut entries: Vec<ScheduleEntry>) -> Result<Self, ScheduleReject> {
        for e in &entries {
            if e.duration == 0 || e.start >= MINUTES_PER_DAY || e.duration > MINUTES_PER_DAY - e.start {
                return Err(ScheduleReject::new(
                    RejectReason::Unparseable,
                    format!("entry `{}` at minute {} does not fit inside the day", e.task, e.start),
                ));
            }
        }
        entries.sort_by_key(|e| e.start);
        for w in entries.windows(2) {
            if w[1].start < w[0].end() {
                return Err(ScheduleReject::new(
                    RejectReason::Overlap,
                    format!("`{}` overlaps `{}`", w[1].to_line(), w[0].to_line()),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn task_names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.task.as_str()).collect()
    }

    /// Task names followed by the end-of-day marker.
    pub fn slots(&self) -> Vec<&str> {
        let mut v = self.task_names();
        v.push(END_OF_DAY);
        v
    }

    /// Canonical line form, one entry per line.
    pub fn to_lines(&self) -> String {
        self.entries.iter().map(|e| e.to_line() + "\n").collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = JsonlLine::Entry { task: e.task.clone(), start_min: e.start, duration_min: e.duration };
            out.push_str(&serde_json::to_string(&line).expect("entry serialises"));
            out.push('\n');
        }
        out.push_str("{\"end\":true}\n");
        out
    }

    pub fn from_jsonl(s: &str) -> Result<Self, SchedulerError> {
        let mut entries = Vec::new();
        let mut ended = false;
        for (i, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            if ended {
                return Err(SchedulerError::Format(format!("line {}: content after end marker", i + 1)));
            }
            match serde_json::from_str(line).map_err(|e| SchedulerError::Format(format!("line {}: {e}", i + 1)))? {
                JsonlLine::End { end: true } => ended = true,
                JsonlLine::End { end: false } => {
                    return Err(SchedulerError::Format(format!("line {}: end marker must be true", i + 1)))
                }
                JsonlLine::Entry { task, start_min, duration_min } => {
                    entries.push(ScheduleEntry { task, start: start_min, duration: duration_min })
                }
            }
        }
        if !ended {
            return Err(SchedulerError::Format("missing end-of-day marker".into()));
        }
        Schedule::new(entries).map_err(|r| SchedulerError::Format(r.detail))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    UnknownTask,
    Overlap,
    Unparseable,
    EmptySchedule,
    /// The provider failed after its retries.
    Transport,
}

impl RejectReason {
    pub const ALL: [RejectReason; 5] = [
        RejectReason::UnknownTask,
        RejectReason::Overlap,
        RejectReason::Unparseable,
        RejectReason::EmptySchedule,
        RejectReason::Transport,
    ];
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Why a single response was not accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleReject {
    pub reason: RejectReason,
    pub detail: String,
}

impl ScheduleReject {
    pub fn new(reason: RejectReason, detail: impl Into<String>) -> Self {
        Self { reason, detail: detail.into() }
    }
}

fn entry_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\s*(?:[-*•]\s*|\d{1,3}[.)]\s+)?\**(\d{1,2}):(\d{2})\s*(?:-|–|—|to)\s*(\d{1,2}):(\d{2})\**\s*(?:[|:\-–—]\s*)?(.*?)\s*$",
        )
        .expect("valid regex")
    })
}

fn starts_with_time_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*•]\s*|\d{1,3}[.)]\s+)?\**\d{1,2}:\d{2}").expect("valid regex"))
}

fn clock(h: &str, m: &str, is_end: bool) -> Option<u32> {
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    match (h, m) {
        (24, 0) if is_end => Some(MINUTES_PER_DAY),
        (0..=23, 0..=59) => Some(h * 60 + m),
        _ => None,
    }
}

fn clean_task_name(raw: &str) -> &str {
    raw.trim().trim_matches(|c: char| matches!(c, '*' | '"' | '\'' | '`' | '_')).trim()
}

fn resolve_task(catalog: &TaskCatalog, raw: &str) -> Result<String, ScheduleReject> {
    let name = clean_task_name(raw);
    if name.is_empty() {
        return Err(ScheduleReject::new(RejectReason::Unparseable, "entry has no task name"));
    }
    if let Some(t) = catalog.resolve(name) {
        return Ok(t.name.clone());
    }
    // tolerate a trailing note such as "Work (deep focus)"
    if let Some(idx) = name.find('(') {
        if let Some(t) = catalog.resolve(name[..idx].trim()) {
            return Ok(t.name.clone());
        }
    }
    Err(ScheduleReject::new(RejectReason::UnknownTask, format!("`{name}` is not in the task catalog")))
}

fn build_entry(
    catalog: &TaskCatalog,
    start: Option<u32>,
    end: Option<u32>,
    task: &str,
    context: &str,
) -> Result<ScheduleEntry, ScheduleReject> {
    let bad_time = || ScheduleReject::new(RejectReason::Unparseable, format!("invalid time in `{context}`"));
    let start = start.filter(|&s| s < MINUTES_PER_DAY).ok_or_else(bad_time)?;
    let end = end.ok_or_else(bad_time)?;
    if end <= start {
        return Err(ScheduleReject::new(RejectReason::Unparseable, format!("`{context}` ends before it starts")));
    }
    let task = resolve_task(catalog, task)?;
    Ok(ScheduleEntry { task, start, duration: end - start })
}

#[derive(Deserialize)]
struct JsonEntry {
    start: String,
    end: String,
    task: String,
}

fn parse_hhmm(s: &str, is_end: bool) -> Option<u32> {
    let (h, m) = s.trim().split_once(':')?;
    if m.len() != 2 || h.is_empty() || h.len() > 2 {
        return None;
    }
    clock(h, m, is_end)
}

fn strip_fences(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Parses a model response into a validated schedule.
///
/// Accepts `HH:MM - HH:MM | Task` lines (with optional bullets or numbering,
/// and surrounding chatter lines that carry no times) or a JSON array of
/// `{start, end, task}` objects. The first failed rule decides the reject
/// reason. Never panics.
pub fn parse_schedule(raw: &str, catalog: &TaskCatalog) -> Result<Schedule, ScheduleReject> {
    if raw.trim().is_empty() {
        return Err(ScheduleReject::new(RejectReason::EmptySchedule, "response is blank"));
    }
    let body = strip_fences(raw);
    let entries = if body.starts_with('[') {
        let items: Vec<JsonEntry> = serde_json::from_str(body)
            .map_err(|e| ScheduleReject::new(RejectReason::Unparseable, format!("invalid JSON schedule: {e}")))?;
        items
            .iter()
            .map(|j| {
                let ctx = format!("{} - {} {}", j.start, j.end, j.task);
                build_entry(catalog, parse_hhmm(&j.start, false), parse_hhmm(&j.end, true), &j.task, &ctx)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let mut entries = Vec::new();
        for line in body.lines() {
            if let Some(c) = entry_re().captures(line) {
                let start = clock(&c[1], &c[2], false);
                let end = clock(&c[3], &c[4], true);
                entries.push(build_entry(catalog, start, end, &c[5], line.trim())?);
            } else if starts_with_time_re().is_match(line) {
                return Err(ScheduleReject::new(
                    RejectReason::Unparseable,
                    format!("`{}` is not of the form HH:MM - HH:MM | Task", line.trim()),
                ));
            }
        }
        entries
    };
    if entries.is_empty() {
        return Err(ScheduleReject::new(RejectReason::EmptySchedule, "no schedule entries found"));
    }
    Schedule::new(entries)
}
