//! Property tests for the data-type and runtime invariants.

use proptest::prelude::*;

use sandman_core::engine::{reconstruct, replay, simulate_typing, Agent, AgentConfig, AgentProfile, Key, TypingProfile};
use sandman_core::gateway::{MockBehaviour, MockProvider, PlannerConfig};
use sandman_core::persona::{build_persona_prompt, OceanFactor, TraitDirection, TraitLexicon, TraitSpec};
use sandman_core::psychometrics::{
    answerer_config, score_choice, score_sheets, Keying, MpiAnswerSheet, MpiChoice, MpiItem, MpiItemBank,
};
use sandman_core::scheduler::{parse_schedule, TaskCatalog, MINUTES_PER_DAY};
use sandman_core::stats::{describe, expected_schedule, pearson_correlation, welch_t_test, END_OF_DAY};

fn choice() -> impl Strategy<Value = MpiChoice> {
    prop::sample::select(MpiChoice::ALL.to_vec())
}

proptest! {
    #[test]
    fn article_follows_first_letter(title in "[a-zA-Z][a-z]{0,12}", words in prop::collection::vec("[a-z]{1,8}", 1..5)) {
        let mut words = words;
        words.sort();
        words.dedup();
        let spec = TraitSpec {
            factor: OceanFactor::Openness,
            title_pos: title.clone(),
            title_neg: "closed".into(),
            words_pos: words.clone(),
            words_neg: vec!["narrow".into()],
            article_pos: None,
            article_neg: None,
        };
        let text = build_persona_prompt(&spec, TraitDirection::Positive).text;
        let article = if "aeiou".contains(title.chars().next().unwrap().to_ascii_lowercase()) { "an" } else { "a" };
        prop_assert_eq!(
            text,
            format!("Imagine you are {article} {title} person characterised by being {}", words.join(", "))
        );
        prop_assert_eq!(build_persona_prompt(&spec, TraitDirection::Neutral).text, "");
    }

    #[test]
    fn reverse_keying_sums_to_six(c in choice(), f in prop::sample::select(OceanFactor::ALL.to_vec())) {
        let pos = MpiItem { id: "i".into(), statement: "s".into(), factor: f, keying: Keying::Positive };
        let neg = MpiItem { keying: Keying::Negative, ..pos.clone() };
        prop_assert_eq!(score_choice(&pos, c) + score_choice(&neg, c), 6);
        prop_assert!((1..=5).contains(&score_choice(&pos, c)));
    }

    #[test]
    fn factor_scores_stay_on_the_scale(answers in prop::collection::vec(choice(), 30)) {
        let bank = MpiItemBank::fixture();
        let sheets: Vec<MpiAnswerSheet> = answers
            .chunks(10)
            .enumerate()
            .map(|(run, a)| MpiAnswerSheet {
                run_index: run,
                answers: bank.items().iter().zip(a).map(|(i, c)| (i.id.clone(), *c)).collect(),
            })
            .collect();
        let r = score_sheets("p", &bank, &sheets).unwrap();
        for f in &r.factors {
            prop_assert!((1.0..=5.0).contains(&f.mean));
            prop_assert!(f.std_dev >= 0.0);
            prop_assert_eq!(f.n, 6);
        }
    }

    #[test]
    fn parser_never_panics_and_accepts_only_valid_schedules(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        let catalog = TaskCatalog::builtin();
        if let Ok(s) = parse_schedule(&String::from_utf8_lossy(&bytes), &catalog) {
            check_schedule(&s, &catalog)?;
        }
    }

    #[test]
    fn parsed_line_plans_are_valid(lines in prop::collection::vec((0u32..24, 0u32..60, 0u32..24, 0u32..60, 0usize..16), 1..12)) {
        let catalog = TaskCatalog::builtin();
        let names = catalog.names();
        let raw: String = lines
            .iter()
            .map(|(h1, m1, h2, m2, t)| format!("{h1:02}:{m1:02} - {h2:02}:{m2:02} | {}\n", names[t % names.len()]))
            .collect();
        if let Ok(s) = parse_schedule(&raw, &catalog) {
            check_schedule(&s, &catalog)?;
            prop_assert_eq!(parse_schedule(&s.to_lines(), &catalog).unwrap(), s);
        }
    }

    #[test]
    fn describe_zero_spread_iff_constant(xs in prop_oneof![
        prop::collection::vec(-1e3f64..1e3, 1..40),
        (-1e3f64..1e3, 1usize..40).prop_map(|(x, n)| vec![x; n]),
    ]) {
        let d = describe(&xs).unwrap();
        let constant = xs.iter().all(|&x| x == xs[0]);
        prop_assert!(d.std_dev >= 0.0);
        prop_assert_eq!(d.std_dev == 0.0, constant);
    }

    #[test]
    fn test_results_are_well_formed(
        a in prop::collection::vec(0f64..100.0, 2..30),
        b in prop::collection::vec(0f64..100.0, 2..30),
    ) {
        if let Ok(r) = welch_t_test(&a, &b) {
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert_eq!(r.significant, r.p_value <= 0.05);
        }
        let n = a.len().min(b.len());
        if let Ok(c) = pearson_correlation(&a[..n], &b[..n]) {
            prop_assert!(c.rho.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn expected_schedule_takes_the_mode(seqs in prop::collection::vec(prop::collection::vec(0usize..5, 0..10), 1..20)) {
        let order = ["Call", "Coffee", "Lunch", "Work", "Break"];
        let seqs: Vec<Vec<&str>> = seqs.iter().map(|s| s.iter().map(|&i| order[i]).collect()).collect();
        let e = expected_schedule(&seqs, &order).unwrap();
        let longest = seqs.iter().map(Vec::len).max().unwrap();
        prop_assert_eq!(e.slots.len(), longest + 1);
        for (pos, slot) in e.slots.iter().enumerate() {
            let count = |t: &str| seqs.iter().filter(|s| s.get(pos).copied().unwrap_or(END_OF_DAY) == t).count();
            prop_assert_eq!(slot.frequency, count(&slot.task));
            for t in order.iter().copied().chain([END_OF_DAY]) {
                prop_assert!(slot.frequency >= count(t));
            }
        }
    }

    #[test]
    fn typing_reconstructs_content(content in "\\PC{0,80}", p in 0f64..0.5, seed in any::<u64>()) {
        let profile = TypingProfile { mistake_probability: p, ..TypingProfile::default() };
        let keys = simulate_typing(&content, &profile, seed);
        prop_assert_eq!(reconstruct(keys.iter().map(|k| &k.key)), content.clone());
        prop_assert!(keys.windows(2).all(|w| w[0].offset_ms <= w[1].offset_ms));
        let backspaces = keys.iter().filter(|k| k.key == Key::Backspace).count();
        prop_assert_eq!(keys.len(), content.chars().count() + 2 * backspaces);
    }
}

fn check_schedule(s: &sandman_core::scheduler::Schedule, catalog: &TaskCatalog) -> Result<(), TestCaseError> {
    let entries = s.entries();
    prop_assert!(!entries.is_empty());
    for e in entries {
        prop_assert!(e.duration > 0);
        prop_assert!(e.start < MINUTES_PER_DAY);
        prop_assert!(e.end() <= MINUTES_PER_DAY);
        prop_assert!(catalog.resolve(&e.task).is_some_and(|d| d.name == e.task));
    }
    for w in entries.windows(2) {
        prop_assert!(w[0].end() <= w[1].start, "{:?} overlaps {:?}", w[0], w[1]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Mock days replay exactly, keep time moving forward, and only ever
    /// append to episodic memory.
    #[test]
    fn agent_days_replay_and_append(seed in any::<u64>(), label in prop::sample::select(vec!["Neutral", "C+", "N-", "E+"])) {
        let lexicon = TraitLexicon::builtin();
        let provider = MockProvider::new(
            seed,
            MockBehaviour::Auto { mpi: answerer_config(&lexicon, &MpiItemBank::builtin()), planner: PlannerConfig::default() },
        );
        let persona = if label == "Neutral" {
            sandman_core::persona::PersonaPrompt::neutral()
        } else {
            lexicon.prompt_for_label(label).unwrap()
        };
        let mut agent = Agent::new(AgentProfile::new("Kim Lee", "a clerk", persona), &provider, AgentConfig::default(), seed).unwrap();
        let catalog = TaskCatalog::builtin();
        agent.run_day(&catalog).unwrap();
        let first_day = agent.memory().episodic.events().to_vec();
        agent.run_day(&catalog).unwrap();
        prop_assert!(agent.memory().episodic.events().starts_with(&first_day));

        let log = sandman_core::engine::read_action_log(agent.action_log_jsonl().as_bytes()).unwrap();
        prop_assert!(log.windows(2).all(|w| w[0].t <= w[1].t));
        prop_assert_eq!(replay(&log).unwrap(), agent.snapshot());
    }
}
