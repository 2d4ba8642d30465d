//! OCEAN factors, trait lexicon and the persona induction prompt.
//!
//! A persona statement has the fixed shape
//! `Imagine you are a/an {title} person characterised by being {w1, w2, ...}`,
//! where the title and words come from the positive or negative pole of a
//! [`TraitSpec`]. The neutral (control) direction renders nothing.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.toml");

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("invalid trait spec for {factor}: {reason}")]
    InvalidSpec { factor: OceanFactor, reason: String },
    #[error("unknown OCEAN factor `{0}`")]
    UnknownFactor(String),
    #[error("unknown trait direction `{0}`")]
    UnknownDirection(String),
    #[error("lexicon is missing factor {0}")]
    MissingFactor(OceanFactor),
    #[error("lexicon lists factor {0} more than once")]
    DuplicateFactor(OceanFactor),
    #[error("failed to read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse lexicon: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OceanFactor {
    #[serde(rename = "O", alias = "Openness")]
    Openness,
    #[serde(rename = "C", alias = "Conscientiousness")]
    Conscientiousness,
    #[serde(rename = "E", alias = "Extraversion")]
    Extraversion,
    #[serde(rename = "A", alias = "Agreeableness")]
    Agreeableness,
    #[serde(rename = "N", alias = "Neuroticism")]
    Neuroticism,
}

impl OceanFactor {
    /// Canonical reporting order O, C, E, A, N.
    pub const ALL: [OceanFactor; 5] = [
        OceanFactor::Openness,
        OceanFactor::Conscientiousness,
        OceanFactor::Extraversion,
        OceanFactor::Agreeableness,
        OceanFactor::Neuroticism,
    ];

    pub fn letter(self) -> char {
        match self {
            OceanFactor::Openness => 'O',
            OceanFactor::Conscientiousness => 'C',
            OceanFactor::Extraversion => 'E',
            OceanFactor::Agreeableness => 'A',
            OceanFactor::Neuroticism => 'N',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OceanFactor::Openness => "Openness",
            OceanFactor::Conscientiousness => "Conscientiousness",
            OceanFactor::Extraversion => "Extraversion",
            OceanFactor::Agreeableness => "Agreeableness",
            OceanFactor::Neuroticism => "Neuroticism",
        }
    }

    /// Position in [`OceanFactor::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for OceanFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for OceanFactor {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        OceanFactor::ALL
            .into_iter()
            .find(|f| {
                t.eq_ignore_ascii_case(f.name()) || (t.len() == 1 && t.eq_ignore_ascii_case(&f.letter().to_string()))
            })
            .ok_or_else(|| PersonaError::UnknownFactor(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitDirection {
    Positive,
    Negative,
    /// Control condition: no persona statement.
    Neutral,
}

impl TraitDirection {
    pub fn sign(self) -> &'static str {
        match self {
            TraitDirection::Positive => "+",
            TraitDirection::Negative => "-",
            TraitDirection::Neutral => "",
        }
    }
}

impl FromStr for TraitDirection {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pos" | "positive" | "+" | "high" => Ok(TraitDirection::Positive),
            "neg" | "negative" | "-" | "low" => Ok(TraitDirection::Negative),
            "neutral" | "none" | "control" => Ok(TraitDirection::Neutral),
            _ => Err(PersonaError::UnknownDirection(s.to_string())),
        }
    }
}

/// One lexicon record: titles and descriptor words for both poles of a factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitSpec {
    pub factor: OceanFactor,
    pub title_pos: String,
    pub title_neg: String,
    pub words_pos: Vec<String>,
    pub words_neg: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_pos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_neg: Option<String>,
}

impl TraitSpec {
    pub fn validate(&self) -> Result<(), PersonaError> {
        let bad = |reason: &str| PersonaError::InvalidSpec { factor: self.factor, reason: reason.to_string() };
        if self.title_pos.trim().is_empty() || self.title_neg.trim().is_empty() {
            return Err(bad("titles must be non-empty"));
        }
        for (pole, words) in [("positive", &self.words_pos), ("negative", &self.words_neg)] {
            if words.is_empty() {
                return Err(bad(&format!("{pole} word list is empty")));
            }
            if words.iter().any(|w| w.trim().is_empty()) {
                return Err(bad(&format!("{pole} word list contains a blank word")));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = words.iter().find(|w| !seen.insert(w.trim().to_lowercase())) {
                return Err(bad(&format!("duplicate word `{dup}` in {pole} list")));
            }
        }
        for article in [&self.article_pos, &self.article_neg].into_iter().flatten() {
            if article != "a" && article != "an" {
                return Err(bad(&format!("article override must be `a` or `an`, got `{article}`")));
            }
        }
        Ok(())
    }

    fn pole(&self, direction: TraitDirection) -> Option<(&str, &[String], Option<&str>)> {
        match direction {
            TraitDirection::Positive => Some((&self.title_pos, &self.words_pos, self.article_pos.as_deref())),
            TraitDirection::Negative => Some((&self.title_neg, &self.words_neg, self.article_neg.as_deref())),
            TraitDirection::Neutral => None,
        }
    }
}

/// Rendered persona statement. Empty for the neutral direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaPrompt {
    pub text: String,
    pub factor: Option<OceanFactor>,
    pub direction: TraitDirection,
}

impl PersonaPrompt {
    pub fn neutral() -> Self {
        Self { text: String::new(), factor: None, direction: TraitDirection::Neutral }
    }

    pub fn is_neutral(&self) -> bool {
        self.text.is_empty()
    }

    /// Short condition label such as `E+`, `C-` or `Neutral`.
    pub fn label(&self) -> String {
        match (self.factor, self.direction) {
            (Some(f), TraitDirection::Positive | TraitDirection::Negative) => format!("{f}{}", self.direction.sign()),
            _ => "Neutral".to_string(),
        }
    }
}

/// Indefinite article by first letter: `an` before a, e, i, o, u.
pub fn indefinite_article(word: &str) -> &'static str {
    match word.trim_start().chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

pub fn build_persona_prompt(spec: &TraitSpec, direction: TraitDirection) -> PersonaPrompt {
    let Some((title, words, article)) = spec.pole(direction) else {
        return PersonaPrompt::neutral();
    };
    let article = article.unwrap_or_else(|| indefinite_article(title));
    let text = format!("Imagine you are {article} {title} person characterised by being {}", words.join(", "));
    PersonaPrompt { text, factor: Some(spec.factor), direction }
}

#[derive(Debug, Deserialize, Serialize)]
struct LexiconFile {
    #[serde(rename = "trait")]
    traits: Vec<TraitSpec>,
}

/// The five trait specs, indexed by factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraitLexicon {
    specs: Vec<TraitSpec>,
}

impl TraitLexicon {
    pub fn from_toml_str(s: &str) -> Result<Self, PersonaError> {
        let file: LexiconFile = toml::from_str(s)?;
        Self::new(file.traits)
    }

    pub fn load(path: &Path) -> Result<Self, PersonaError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The lexicon bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn new(specs: Vec<TraitSpec>) -> Result<Self, PersonaError> {
        let mut ordered: Vec<Option<TraitSpec>> = vec![None; 5];
        for spec in specs {
            spec.validate()?;
            let slot = &mut ordered[spec.factor.index()];
            if slot.is_some() {
                return Err(PersonaError::DuplicateFactor(spec.factor));
            }
            *slot = Some(spec);
        }
        let specs = ordered
            .into_iter()
            .zip(OceanFactor::ALL)
            .map(|(s, f)| s.ok_or(PersonaError::MissingFactor(f)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { specs })
    }

    pub fn spec(&self, factor: OceanFactor) -> &TraitSpec {
        &self.specs[factor.index()]
    }

    pub fn specs(&self) -> &[TraitSpec] {
        &self.specs
    }

    pub fn prompt(&self, factor: OceanFactor, direction: TraitDirection) -> PersonaPrompt {
        build_persona_prompt(self.spec(factor), direction)
    }

    /// Parses a condition label (`Neutral`, `E+`, `C-`, `O pos`) into a persona.
    pub fn prompt_for_label(&self, label: &str) -> Result<PersonaPrompt, PersonaError> {
        let t = label.trim();
        if t.eq_ignore_ascii_case("neutral") || t.eq_ignore_ascii_case("control") {
            return Ok(PersonaPrompt::neutral());
        }
        let (factor, direction) = parse_condition_label(t)?;
        Ok(self.prompt(factor, direction))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&LexiconFile { traits: self.specs.clone() }).expect("lexicon serialises")
    }
}

/// Parses `E+`, `e-`, `E (+)`, `Extraversion pos` and similar.
pub fn parse_condition_label(label: &str) -> Result<(OceanFactor, TraitDirection), PersonaError> {
    let t = label.trim();
    let cleaned: String = t.chars().filter(|c| !matches!(c, '(' | ')')).collect();
    let cleaned = cleaned.trim();
    if let Some(last) = cleaned.chars().last() {
        if last == '+' || last == '-' || last == '\u{2212}' {
            let head = cleaned[..cleaned.len() - last.len_utf8()].trim();
            let dir = if last == '+' { TraitDirection::Positive } else { TraitDirection::Negative };
            return Ok((head.parse()?, dir));
        }
    }
    let mut parts = cleaned.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(f), Some(d), None) => Ok((f.parse()?, d.parse()?)),
        _ => Err(PersonaError::UnknownFactor(label.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(factor: OceanFactor, tp: &str, wp: &[&str], tn: &str, wn: &[&str]) -> TraitSpec {
        TraitSpec {
            factor,
            title_pos: tp.into(),
            title_neg: tn.into(),
            words_pos: wp.iter().map(|s| s.to_string()).collect(),
            words_neg: wn.iter().map(|s| s.to_string()).collect(),
            article_pos: None,
            article_neg: None,
        }
    }

    #[test]
    fn extraverted_example_is_byte_exact() {
        let s = spec(
            OceanFactor::Extraversion,
            "extraverted",
            &["outgoing", "energetic", "public"],
            "introverted",
            &["reserved"],
        );
        let p = build_persona_prompt(&s, TraitDirection::Positive);
        assert_eq!(p.text, "Imagine you are an extraverted person characterised by being outgoing, energetic, public");
        assert_eq!(p.label(), "E+");
    }

    #[test]
    fn negative_pole_uses_antonyms() {
        let s = spec(
            OceanFactor::Conscientiousness,
            "conscientious",
            &["organised"],
            "careless",
            &["disorganised", "negligent"],
        );
        let p = build_persona_prompt(&s, TraitDirection::Negative);
        assert_eq!(p.text, "Imagine you are a careless person characterised by being disorganised, negligent");
        assert_eq!(p.label(), "C-");
    }

    #[test]
    fn neutral_is_empty() {
        let lex = TraitLexicon::builtin();
        for f in OceanFactor::ALL {
            let p = lex.prompt(f, TraitDirection::Neutral);
            assert!(p.text.is_empty());
            assert_eq!(p.label(), "Neutral");
        }
    }

    #[test]
    fn article_override_wins() {
        let mut s = spec(OceanFactor::Openness, "unusual", &["odd"], "honest", &["plain"]);
        s.article_pos = Some("a".into());
        s.article_neg = Some("an".into());
        assert!(build_persona_prompt(&s, TraitDirection::Positive).text.starts_with("Imagine you are a unusual"));
        assert!(build_persona_prompt(&s, TraitDirection::Negative).text.starts_with("Imagine you are an honest"));
    }

    #[test]
    fn invalid_specs_rejected() {
        let empty_words = spec(OceanFactor::Openness, "open", &[], "closed", &["x"]);
        assert!(empty_words.validate().is_err());
        let dup = spec(OceanFactor::Openness, "open", &["a", "A"], "closed", &["x"]);
        assert!(dup.validate().is_err());
        let blank_title = spec(OceanFactor::Openness, " ", &["a"], "closed", &["x"]);
        assert!(blank_title.validate().is_err());
    }

    #[test]
    fn builtin_lexicon_covers_all_factors_in_order() {
        let lex = TraitLexicon::builtin();
        let factors: Vec<_> = lex.specs().iter().map(|s| s.factor).collect();
        assert_eq!(factors, OceanFactor::ALL);
        let again = TraitLexicon::from_toml_str(&lex.to_toml_string()).unwrap();
        assert_eq!(again, lex);
    }

    #[test]
    fn lexicon_rejects_missing_and_duplicate_factors() {
        let lex = TraitLexicon::builtin();
        let four = lex.specs()[..4].to_vec();
        assert!(matches!(TraitLexicon::new(four), Err(PersonaError::MissingFactor(OceanFactor::Neuroticism))));
        let mut six = lex.specs().to_vec();
        six.push(lex.specs()[0].clone());
        assert!(matches!(TraitLexicon::new(six), Err(PersonaError::DuplicateFactor(_))));
    }

    #[test]
    fn condition_labels_parse() {
        use OceanFactor::*;
        use TraitDirection::*;
        assert_eq!(parse_condition_label("E+").unwrap(), (Extraversion, Positive));
        assert_eq!(parse_condition_label("c-").unwrap(), (Conscientiousness, Negative));
        assert_eq!(parse_condition_label("N (-)").unwrap(), (Neuroticism, Negative));
        assert_eq!(parse_condition_label("Openness pos").unwrap(), (Openness, Positive));
        assert!(parse_condition_label("Q+").is_err());
        assert!(TraitLexicon::builtin().prompt_for_label("Neutral").unwrap().is_neutral());
    }
}
