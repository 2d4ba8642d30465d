use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    parse_choice, score_choice, Keying, MpiChoice, MpiItem, MpiItemBank, PsychometricsError, TraitScoreReport,
};
use crate::concurrency::fan_out;
use crate::gateway::{
    ChatProvider, ChatRequest, ItemCue, MpiAnswererConfig, TraitCue, DEFAULT_MODEL, DEFAULT_TEMPERATURE,
};
use crate::persona::{OceanFactor, PersonaPrompt, TraitLexicon};
use crate::stats::{self, StatResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpiOptions {
    pub runs: usize,
    pub temperature: f64,
    pub model: String,
    /// Re-asks per item after an unparseable answer.
    pub retry_budget: u32,
    /// Shuffle item order per run, seeded with `seed + run`.
    pub shuffle_seed: Option<u64>,
    pub parallelism: usize,
}

impl Default for MpiOptions {
    fn default() -> Self {
        Self {
            runs: 5,
            temperature: DEFAULT_TEMPERATURE,
            model: DEFAULT_MODEL.to_string(),
            retry_budget: 2,
            shuffle_seed: None,
            parallelism: 8,
        }
    }
}

/// One item as presented to the model. The persona line, when present, comes
/// first and is separated by a blank line.
pub fn mpi_prompt(persona: &PersonaPrompt, item: &MpiItem) -> String {
    let mut out = String::new();
    if !persona.is_neutral() {
        out.push_str(&persona.text);
        out.push_str("\n\n");
    }
    let statement = item.statement.trim().trim_end_matches('.');
    let mut chars = statement.chars();
    let statement = match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect::<String>(),
        None => String::new(),
    };
    out.push_str(&format!("Given a statement of you: \"You {statement}.\"\n"));
    out.push_str("Please choose from the following options to identify how accurately this statement describes you.\n");
    out.push_str("Options:\n");
    for c in MpiChoice::ALL {
        out.push_str(&format!("{c}\n"));
    }
    out.push_str("Answer:");
    out
}

/// Administers `bank` `options.runs` times under `persona`.
///
/// Items whose answers stay unparseable after the retry budget are excluded
/// and counted in [`TraitScoreReport::invalid`]. A provider error aborts the
/// whole administration.
pub fn administer_mpi<P: ChatProvider + ?Sized>(
    provider: &P,
    persona: &PersonaPrompt,
    bank: &MpiItemBank,
    options: &MpiOptions,
) -> Result<TraitScoreReport, PsychometricsError> {
    if options.runs == 0 {
        return Err(PsychometricsError::NoRuns);
    }
    let parallelism = options.parallelism.max(1).min(provider.max_parallelism());
    let mut scored = Vec::with_capacity(options.runs * bank.len());
    let mut invalid = 0usize;

    for run in 0..options.runs {
        let order = match options.shuffle_seed {
            Some(seed) => bank.shuffled(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64))),
            None => bank.clone(),
        };
        let items = order.items();
        let answers = fan_out(items.len(), parallelism, |i| ask_item(provider, persona, &items[i], run, options));
        for (item, answer) in items.iter().zip(answers) {
            match answer.map_err(|source| PsychometricsError::Provider { run, source })? {
                Some(choice) => scored.push((item.factor, score_choice(item, choice))),
                None => invalid += 1,
            }
        }
        tracing::debug!(run, label = %persona.label(), "MPI run complete");
    }
    if invalid > 0 {
        tracing::warn!(invalid, label = %persona.label(), "excluded unparseable MPI answers");
    }
    Ok(TraitScoreReport::from_scores(persona.label(), options.runs, scored, invalid))
}

fn ask_item<P: ChatProvider + ?Sized>(
    provider: &P,
    persona: &PersonaPrompt,
    item: &MpiItem,
    run: usize,
    options: &MpiOptions,
) -> Result<Option<MpiChoice>, crate::gateway::GatewayError> {
    let prompt = mpi_prompt(persona, item);
    for attempt in 0..=options.retry_budget {
        let request = ChatRequest::new(prompt.clone())
            .with_temperature(options.temperature)
            .with_model(options.model.clone())
            .with_replicate(run as u64)
            .with_attempt(attempt);
        let response = provider.complete(&request)?;
        match parse_choice(&response.text) {
            Ok(choice) => return Ok(Some(choice)),
            Err(e) => tracing::debug!(item = %item.id, attempt, "{e}"),
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorComparison {
    pub factor: OceanFactor,
    pub experimental_mean: f64,
    pub control_mean: f64,
    pub result: StatResult,
}

/// Welch test of experimental against control, factor by factor.
pub fn compare_traits(
    experimental: &TraitScoreReport,
    control: &TraitScoreReport,
) -> Result<Vec<FactorComparison>, PsychometricsError> {
    OceanFactor::ALL
        .iter()
        .map(|&factor| {
            let (e, c) = (experimental.factor(factor), control.factor(factor));
            let result = stats::welch_t_test(&e.samples(), &c.samples())
                .map_err(|source| PsychometricsError::InsufficientData { factor, source })?;
            Ok(FactorComparison { factor, experimental_mean: e.mean, control_mean: c.mean, result })
        })
        .collect()
}

/// Mock answerer that reacts to this lexicon's descriptor words on the items
/// of `bank`.
pub fn answerer_config(lexicon: &TraitLexicon, bank: &MpiItemBank) -> MpiAnswererConfig {
    let mut cues = Vec::new();
    for spec in lexicon.specs() {
        for (words, sign) in [(&spec.words_pos, 1.0), (&spec.words_neg, -1.0)] {
            cues.extend(words.iter().map(|w| TraitCue { word: w.clone(), factor: spec.factor, sign }));
        }
    }
    let items = bank
        .items()
        .iter()
        .map(|i| ItemCue {
            statement: i.statement.clone(),
            factor: i.factor,
            positively_keyed: i.keying == Keying::Positive,
        })
        .collect();
    MpiAnswererConfig { cues, items, ..MpiAnswererConfig::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{GatewayError, MockBehaviour, MockProvider, ScriptedTranscript};
    use crate::persona::TraitDirection;

    #[test]
    fn prompt_layout() {
        let item = MpiItem {
            id: "A1".into(),
            statement: "Love to help others".into(),
            factor: OceanFactor::Agreeableness,
            keying: Keying::Positive,
        };
        let neutral = mpi_prompt(&PersonaPrompt::neutral(), &item);
        assert!(neutral.starts_with("Given a statement of you: \"You love to help others.\"\n"));
        assert!(neutral.contains("(A). Very Accurate\n(B). Moderately Accurate\n"));
        assert!(neutral.ends_with("(E). Very Inaccurate\nAnswer:"));
        let persona = TraitLexicon::builtin().prompt(OceanFactor::Extraversion, TraitDirection::Positive);
        let induced = mpi_prompt(&persona, &item);
        assert_eq!(induced, format!("{}\n\n{neutral}", persona.text));
    }

    #[test]
    fn constant_answers_give_constant_scores() {
        let items: Vec<MpiItem> = MpiItemBank::builtin()
            .items()
            .iter()
            .cloned()
            .map(|mut i| {
                i.keying = Keying::Positive;
                i
            })
            .collect();
        let bank = MpiItemBank::new(items).unwrap();
        let p = MockProvider::new(0, MockBehaviour::MpiAnswerer(MpiAnswererConfig::constant('A')));
        let r = administer_mpi(&p, &PersonaPrompt::neutral(), &bank, &MpiOptions::default()).unwrap();
        for f in &r.factors {
            assert_eq!((f.mean, f.std_dev, f.n), (5.0, 0.0, 120));
        }
        assert_eq!(r.invalid, 0);
    }

    #[test]
    fn unparseable_answers_are_retried_then_excluded() {
        let bank = MpiItemBank::fixture();
        // first item: two junk answers then B; second: junk three times; rest: C
        let mut texts = vec!["hmm", "not sure", "B", "x1", "x2", "x3"];
        texts.extend(["C"; 8]);
        let p = MockProvider::new(0, MockBehaviour::Scripted(ScriptedTranscript::from_texts(texts)));
        let opts = MpiOptions { runs: 1, ..MpiOptions::default() };
        let r = administer_mpi(&p, &PersonaPrompt::neutral(), &bank, &opts).unwrap();
        assert_eq!(r.invalid, 1);
        let o = r.factor(OceanFactor::Openness);
        assert_eq!(o.scores, vec![4]);
    }

    #[test]
    fn provider_failure_aborts() {
        let p = MockProvider::new(0, MockBehaviour::Scripted(ScriptedTranscript::from_texts(["A"; 3])));
        let err = administer_mpi(&p, &PersonaPrompt::neutral(), &MpiItemBank::fixture(), &MpiOptions::default());
        assert!(matches!(err, Err(PsychometricsError::Provider { run: 0, source: GatewayError::Transport(_) })));
    }

    #[test]
    fn seeded_mock_is_deterministic_and_responds_to_persona() {
        let lex = TraitLexicon::builtin();
        let bank = MpiItemBank::builtin();
        let cfg = answerer_config(&lex, &bank);
        let p = MockProvider::new(11, MockBehaviour::MpiAnswerer(cfg.clone()));
        let q = MockProvider::new(11, MockBehaviour::MpiAnswerer(cfg));
        let opts = MpiOptions::default();
        let control = administer_mpi(&p, &PersonaPrompt::neutral(), &bank, &opts).unwrap();
        assert_eq!(control, administer_mpi(&q, &PersonaPrompt::neutral(), &bank, &opts).unwrap());
        let e_pos = lex.prompt(OceanFactor::Extraversion, TraitDirection::Positive);
        let induced = administer_mpi(&p, &e_pos, &bank, &opts).unwrap();
        let cmp = compare_traits(&induced, &control).unwrap();
        let e = &cmp[OceanFactor::Extraversion.index()];
        assert!(e.result.significant && e.experimental_mean > e.control_mean);
    }

    #[test]
    fn self_comparison_is_null() {
        let p = MockProvider::new(
            3,
            MockBehaviour::MpiAnswerer(answerer_config(&TraitLexicon::builtin(), &MpiItemBank::fixture())),
        );
        let r = administer_mpi(&p, &PersonaPrompt::neutral(), &MpiItemBank::fixture(), &MpiOptions::default()).unwrap();
        for c in compare_traits(&r, &r).unwrap() {
            assert_eq!(c.result.statistic, 0.0);
            assert!(!c.result.significant);
        }
    }

    #[test]
    fn shuffle_changes_order_not_totals() {
        let p = MockProvider::new(5, MockBehaviour::MpiAnswerer(MpiAnswererConfig::constant('B')));
        let bank = MpiItemBank::fixture();
        let plain = administer_mpi(&p, &PersonaPrompt::neutral(), &bank, &MpiOptions::default()).unwrap();
        let shuffled = administer_mpi(
            &p,
            &PersonaPrompt::neutral(),
            &bank,
            &MpiOptions { shuffle_seed: Some(9), ..MpiOptions::default() },
        )
        .unwrap();
        for (a, b) in plain.factors.iter().zip(&shuffled.factors) {
            assert_eq!(a.mean, b.mean);
        }
    }
}
