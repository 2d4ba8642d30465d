//! Per-slot modal task across a population of schedules.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Label used for the padding slot after a schedule's last task.
pub const END_OF_DAY: &str = "End";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedSlot {
    /// 1-based slot position.
    pub index: usize,
    /// Modal task name, or [`END_OF_DAY`].
    pub task: String,
    pub frequency: usize,
    /// More than one label reached the modal frequency.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpectedSchedule {
    pub slots: Vec<ExpectedSlot>,
}

impl ExpectedSchedule {
    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.task.as_str())
    }
}

/// Computes the expected schedule of a set of task sequences.
///
/// Every sequence is terminated with [`END_OF_DAY`] and right-padded with it to
/// the longest length, so the result has `max_len + 1` slots. Ties are broken
/// by position in `tie_order`; names missing from `tie_order` rank after it in
/// lexicographic order, and [`END_OF_DAY`] ranks last.
pub fn expected_schedule<S: AsRef<str>>(
    sequences: &[Vec<S>],
    tie_order: &[&str],
) -> Result<ExpectedSchedule, StatsError> {
    if sequences.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let rank: HashMap<&str, usize> = tie_order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let slot_count = sequences.iter().map(Vec::len).max().unwrap_or(0) + 1;

    let mut slots = Vec::with_capacity(slot_count);
    for pos in 0..slot_count {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for seq in sequences {
            let label = seq.get(pos).map_or(END_OF_DAY, |s| s.as_ref());
            *counts.entry(label).or_default() += 1;
        }
        let best = counts.values().copied().max().unwrap_or(0);
        let mut modal: Vec<&str> = counts.iter().filter(|(_, &c)| c == best).map(|(k, _)| *k).collect();
        modal.sort_by(|a, b| tie_key(a, &rank).cmp(&tie_key(b, &rank)));
        slots.push(ExpectedSlot { index: pos + 1, task: modal[0].to_string(), frequency: best, tie: modal.len() > 1 });
    }
    Ok(ExpectedSchedule { slots })
}

fn tie_key<'a>(name: &'a str, rank: &HashMap<&str, usize>) -> (u8, usize, &'a str) {
    if name == END_OF_DAY {
        (2, 0, name)
    } else if let Some(&r) = rank.get(name) {
        (0, r, name)
    } else {
        (1, 0, name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences_reproduce_themselves() {
        let seq = vec!["Work", "Lunch", "Call"];
        let out = expected_schedule(&[seq.clone(), seq.clone(), seq.clone()], &[]).unwrap();
        assert_eq!(out.tasks().collect::<Vec<_>>(), ["Work", "Lunch", "Call", END_OF_DAY]);
        assert!(out.slots.iter().all(|s| s.frequency == 3 && !s.tie));
    }

    #[test]
    fn padding_and_tie_break() {
        let seqs = vec![vec!["Call", "Lunch"], vec!["Work"]];
        let out = expected_schedule(&seqs, &["Work", "Call", "Lunch"]).unwrap();
        // slot 1 ties Call/Work -> Work first in tie order
        assert_eq!(out.slots[0].task, "Work");
        assert!(out.slots[0].tie);
        // slot 2 ties Lunch/End -> End ranks last
        assert_eq!(out.slots[1].task, "Lunch");
        assert!(out.slots[1].tie);
        assert_eq!(out.slots[2].task, END_OF_DAY);
        assert_eq!(out.slots[2].frequency, 2);
    }

    #[test]
    fn empty_set_is_error() {
        let none: Vec<Vec<String>> = vec![];
        assert!(matches!(expected_schedule(&none, &[]), Err(StatsError::EmptySample)));
    }
}
