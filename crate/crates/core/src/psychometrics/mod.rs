//! Big-Five inventory administration and scoring.
//!
//! Items are single statements answered on a five-point accuracy scale,
//! `(A). Very Accurate` through `(E). Very Inaccurate`. Positively keyed items
//! score A = 5 … E = 1; negatively keyed items are reversed.

mod administer;
mod bank;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::persona::OceanFactor;
use crate::stats::{self, StatsError};

pub use administer::{administer_mpi, answerer_config, compare_traits, mpi_prompt, FactorComparison, MpiOptions};
pub use bank::{MpiItem, MpiItemBank};

#[derive(Debug, Error)]
pub enum PsychometricsError {
    #[error("no option letter A-E found in `{0}`")]
    Unparseable(String),
    #[error("invalid item bank: {0}")]
    InvalidBank(String),
    #[error("answer sheet for run {run} is missing item `{item}`")]
    IncompleteSheet { run: usize, item: String },
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("provider failed during run {run}: {source}")]
    Provider { run: usize, source: GatewayError },
    #[error("insufficient data for factor {factor}: {source}")]
    InsufficientData { factor: OceanFactor, source: StatsError },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keying {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MpiChoice {
    A,
    B,
    C,
    D,
    E,
}

impl MpiChoice {
    pub const ALL: [MpiChoice; 5] = [MpiChoice::A, MpiChoice::B, MpiChoice::C, MpiChoice::D, MpiChoice::E];

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(MpiChoice::A),
            'B' => Some(MpiChoice::B),
            'C' => Some(MpiChoice::C),
            'D' => Some(MpiChoice::D),
            'E' => Some(MpiChoice::E),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn option_text(self) -> &'static str {
        match self {
            MpiChoice::A => "Very Accurate",
            MpiChoice::B => "Moderately Accurate",
            MpiChoice::C => "Neither Accurate Nor Inaccurate",
            MpiChoice::D => "Moderately Inaccurate",
            MpiChoice::E => "Very Inaccurate",
        }
    }
}

impl fmt::Display for MpiChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}). {}", self.letter(), self.option_text())
    }
}

/// Likert score in 1..=5.
pub fn score_choice(item: &MpiItem, choice: MpiChoice) -> u8 {
    let endorsement = 5 - choice as u8;
    match item.keying {
        Keying::Positive => endorsement,
        Keying::Negative => 6 - endorsement,
    }
}

/// Extracts the chosen option from free-form model output.
///
/// In order of preference: a parenthesised letter `(B)`, a letter after
/// `answer`/`option`/`choice`, a standalone capital letter, a reply that is
/// only a letter, and finally the option wording itself.
pub fn parse_choice(raw: &str) -> Result<MpiChoice, PsychometricsError> {
    let unparseable = || PsychometricsError::Unparseable(raw.chars().take(120).collect());
    let chars: Vec<char> = raw.chars().collect();
    let is_letter = |i: usize| chars.get(i).is_some_and(|c| c.is_alphanumeric());

    for i in 0..chars.len() {
        if chars[i] == '(' && chars.get(i + 2) == Some(&')') {
            if let Some(c) = chars.get(i + 1).and_then(|&c| MpiChoice::from_letter(c)) {
                return Ok(c);
            }
        }
    }

    let lower = raw.to_lowercase();
    for key in ["answer", "option", "choice"] {
        if let Some(pos) = lower.find(key) {
            let rest = lower[pos + key.len()..]
                .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '-' | '=' | '*' | '('));
            let rest = rest.strip_prefix("is").map(str::trim_start).unwrap_or(rest);
            let mut it = rest.chars();
            if let (Some(c), next) = (it.next(), it.next()) {
                if !next.is_some_and(char::is_alphanumeric) {
                    if let Some(choice) = MpiChoice::from_letter(c) {
                        return Ok(choice);
                    }
                }
            }
        }
    }

    for i in 0..chars.len() {
        let c = chars[i];
        if c.is_ascii_uppercase() && !is_letter(i.wrapping_sub(1)) && !is_letter(i + 1) {
            if let Some(choice) = MpiChoice::from_letter(c) {
                if i == 0 || chars[i - 1] != '\'' {
                    return Ok(choice);
                }
            }
        }
    }

    let trimmed = raw.trim().trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace());
    if trimmed.chars().count() == 1 {
        if let Some(c) = trimmed.chars().next().and_then(MpiChoice::from_letter) {
            return Ok(c);
        }
    }

    // "inaccurate" wording before "accurate" wording since the former contains the latter
    for choice in [MpiChoice::C, MpiChoice::D, MpiChoice::E, MpiChoice::B, MpiChoice::A] {
        if lower.contains(&choice.option_text().to_lowercase()) {
            return Ok(choice);
        }
    }
    Err(unparseable())
}

/// One complete pass over the inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpiAnswerSheet {
    pub run_index: usize,
    pub answers: BTreeMap<String, MpiChoice>,
}

/// Per-factor summary plus the raw scores it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorScore {
    pub factor: OceanFactor,
    pub mean: f64,
    pub std_dev: f64,
    pub n: usize,
    pub scores: Vec<u8>,
}

impl FactorScore {
    fn from_scores(factor: OceanFactor, scores: Vec<u8>) -> Self {
        let xs: Vec<f64> = scores.iter().map(|&s| f64::from(s)).collect();
        match stats::describe(&xs) {
            Ok(d) => Self { factor, mean: d.mean, std_dev: d.std_dev, n: d.n, scores },
            Err(_) => Self { factor, mean: f64::NAN, std_dev: 0.0, n: 0, scores },
        }
    }

    pub fn samples(&self) -> Vec<f64> {
        self.scores.iter().map(|&s| f64::from(s)).collect()
    }
}

/// OCEAN scores for one condition, factors in O, C, E, A, N order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitScoreReport {
    pub label: String,
    pub runs: usize,
    pub factors: Vec<FactorScore>,
    /// Item responses that could not be parsed and were excluded.
    pub invalid: usize,
}

impl TraitScoreReport {
    pub fn factor(&self, f: OceanFactor) -> &FactorScore {
        &self.factors[f.index()]
    }

    /// Aggregates scored responses (`factor`, score) into a report.
    pub fn from_scores(
        label: impl Into<String>,
        runs: usize,
        scored: impl IntoIterator<Item = (OceanFactor, u8)>,
        invalid: usize,
    ) -> Self {
        let mut per: Vec<Vec<u8>> = vec![Vec::new(); 5];
        for (f, s) in scored {
            per[f.index()].push(s);
        }
        let factors = OceanFactor::ALL.iter().zip(per).map(|(&f, s)| FactorScore::from_scores(f, s)).collect();
        Self { label: label.into(), runs, factors, invalid }
    }
}

/// Scores complete answer sheets against a bank.
pub fn score_sheets(
    label: &str,
    bank: &MpiItemBank,
    sheets: &[MpiAnswerSheet],
) -> Result<TraitScoreReport, PsychometricsError> {
    let mut scored = Vec::with_capacity(bank.len() * sheets.len());
    for sheet in sheets {
        for item in bank.items() {
            let choice = sheet
                .answers
                .get(&item.id)
                .ok_or_else(|| PsychometricsError::IncompleteSheet { run: sheet.run_index, item: item.id.clone() })?;
            scored.push((item.factor, score_choice(item, *choice)));
        }
    }
    Ok(TraitScoreReport::from_scores(label, sheets.len(), scored, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(keying: Keying) -> MpiItem {
        MpiItem { id: "x".into(), statement: "Love to help others".into(), factor: OceanFactor::Agreeableness, keying }
    }

    #[test]
    fn likert_key() {
        let pos = item(Keying::Positive);
        let neg = item(Keying::Negative);
        let want_pos = [5, 4, 3, 2, 1];
        for (c, w) in MpiChoice::ALL.into_iter().zip(want_pos) {
            assert_eq!(score_choice(&pos, c), w);
            assert_eq!(score_choice(&neg, c), 6 - w);
        }
        assert_eq!(score_choice(&pos, MpiChoice::A), 5);
        assert_eq!(score_choice(&neg, MpiChoice::A), 1);
        assert_eq!(score_choice(&neg, MpiChoice::C), 3);
    }

    #[test]
    fn parse_choice_formats() {
        let ok = |s: &str| parse_choice(s).unwrap();
        assert_eq!(ok("(A). Very Accurate"), MpiChoice::A);
        assert_eq!(ok("answer: e"), MpiChoice::E);
        assert_eq!(ok("Answer: B"), MpiChoice::B);
        assert_eq!(ok("C."), MpiChoice::C);
        assert_eq!(ok("d"), MpiChoice::D);
        assert_eq!(ok("I would say (D) Moderately Inaccurate"), MpiChoice::D);
        assert_eq!(ok("I think a fair answer is B"), MpiChoice::B);
        assert_eq!(ok("Moderately inaccurate, I suppose"), MpiChoice::D);
        assert_eq!(ok("My answer is c"), MpiChoice::C);
        assert!(matches!(parse_choice("I cannot decide"), Err(PsychometricsError::Unparseable(_))));
        assert!(parse_choice("").is_err());
    }

    #[test]
    fn choice_display_matches_option_list() {
        assert_eq!(MpiChoice::A.to_string(), "(A). Very Accurate");
        assert_eq!(MpiChoice::E.to_string(), "(E). Very Inaccurate");
    }
}
