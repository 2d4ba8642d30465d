use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::channel::{parse_key_label, ActionEvent, ActionKind};
use super::typing::Key;
use super::{EngineError, TaskStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskState {
    pub slot: usize,
    pub task: String,
    pub status: TaskStatus,
}

/// The observable state of an agent, as rebuilt from its action log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub day: u32,
    pub tasks: Vec<TaskState>,
    pub documents: BTreeMap<String, String>,
    pub day_complete: bool,
    pub last_t: u64,
}

#[derive(Deserialize)]
struct PlannedTask {
    slot: usize,
    task: String,
}

fn field<'a>(ev: &'a ActionEvent, key: &str) -> Result<&'a serde_json::Value, EngineError> {
    ev.payload.get(key).ok_or_else(|| EngineError::Replay(format!("{:?} at t={} lacks `{key}`", ev.kind, ev.t)))
}

fn slot_of(ev: &ActionEvent) -> Result<usize, EngineError> {
    field(ev, "slot")?
        .as_u64()
        .map(|s| s as usize)
        .ok_or_else(|| EngineError::Replay(format!("bad slot at t={}", ev.t)))
}

fn transition(state: &mut AgentState, ev: &ActionEvent, from: TaskStatus, to: TaskStatus) -> Result<(), EngineError> {
    let slot = slot_of(ev)?;
    let task = state
        .tasks
        .iter_mut()
        .find(|t| t.slot == slot)
        .ok_or_else(|| EngineError::Replay(format!("unknown slot {slot} at t={}", ev.t)))?;
    if task.status != from {
        return Err(EngineError::Replay(format!(
            "slot {slot} moved {:?} -> {to:?} at t={}, expected from {from:?}",
            task.status, ev.t
        )));
    }
    task.status = to;
    Ok(())
}

/// Rebuilds agent state from an action log, checking that timestamps never
/// go backwards and that every task moves Pending -> Active -> Done.
pub fn replay<'a>(events: impl IntoIterator<Item = &'a ActionEvent>) -> Result<AgentState, EngineError> {
    let mut state = AgentState::default();
    for ev in events {
        if ev.t < state.last_t {
            return Err(EngineError::Replay(format!("timestamp {} after {}", ev.t, state.last_t)));
        }
        state.last_t = ev.t;
        match ev.kind {
            ActionKind::PlanCreated => {
                let day = field(ev, "day")?.as_u64().unwrap_or(0) as u32;
                let tasks: Vec<PlannedTask> = serde_json::from_value(field(ev, "tasks")?.clone())
                    .map_err(|e| EngineError::Replay(format!("bad plan at t={}: {e}", ev.t)))?;
                state.day = day;
                state.day_complete = false;
                state.tasks = tasks
                    .into_iter()
                    .map(|t| TaskState { slot: t.slot, task: t.task, status: TaskStatus::Pending })
                    .collect();
            }
            ActionKind::TaskStarted => transition(&mut state, ev, TaskStatus::Pending, TaskStatus::Active)?,
            ActionKind::TaskFinished => transition(&mut state, ev, TaskStatus::Active, TaskStatus::Done)?,
            ActionKind::DayComplete => state.day_complete = true,
            ActionKind::Open if ev.channel == "document" => {
                let doc = field(ev, "document")?.as_str().unwrap_or_default().to_string();
                state.documents.entry(doc).or_default();
            }
            ActionKind::KeyPress => {
                let doc = field(ev, "document")?.as_str().unwrap_or_default();
                let key = field(ev, "key")?
                    .as_str()
                    .and_then(parse_key_label)
                    .ok_or_else(|| EngineError::Replay(format!("bad key at t={}", ev.t)))?;
                let buf = state
                    .documents
                    .get_mut(doc)
                    .ok_or_else(|| EngineError::Replay(format!("key press into unopened `{doc}`")))?;
                match key {
                    Key::Char(c) => buf.push(c),
                    Key::Backspace => {
                        buf.pop();
                    }
                }
            }
            _ => {}
        }
    }
    Ok(state)
}

pub fn read_action_log(reader: impl BufRead) -> Result<Vec<ActionEvent>, EngineError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EngineError::Replay(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EngineError::Replay(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ev(t: u64, channel: &str, kind: ActionKind, payload: serde_json::Value) -> ActionEvent {
        ActionEvent::new(t, channel, kind, payload)
    }

    #[test]
    fn rejects_time_travel_and_bad_transitions() {
        let plan = ev(0, "agent", ActionKind::PlanCreated, json!({"day":1,"tasks":[{"slot":1,"task":"Work"}]}));
        let start = ev(10, "agent", ActionKind::TaskStarted, json!({"slot":1}));
        let finish = ev(20, "agent", ActionKind::TaskFinished, json!({"slot":1}));
        assert!(replay([&plan, &start, &finish]).is_ok());
        assert!(replay([&plan, &finish]).is_err());
        assert!(replay([&plan, &finish, &start]).is_err());
        let early = ev(5, "agent", ActionKind::TaskFinished, json!({"slot":1}));
        assert!(replay([&plan, &start, &early]).is_err());
    }
}
