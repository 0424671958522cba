use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use prosodyeval::expdesign::Page;
use prosodyeval::metrics::{punctuation_proportion, stimulus_stats, StimulusKey, StimulusStats};
use prosodyeval::stimgen::{FocusPosition, StimulusStructure};
use prosodyeval::{
    build_plan, generate_qa_stimuli, ExperimentPlan, Lexicon, Rendition, ResponseRecord,
    TaskConfig, TextItem,
};

fn plan(n_texts: usize, k: usize, groups: usize, seed: u64) -> ExperimentPlan {
    let texts: Vec<TextItem> = (0..n_texts)
        .map(|i| TextItem::plain(format!("t{i}"), &format!("word {i} here.")).unwrap())
        .collect();
    let systems: Vec<String> = (0..k).map(|i| format!("s{i}")).collect();
    let renditions = texts
        .iter()
        .flat_map(|t| {
            systems.iter().map(move |s| Rendition {
                text_id: t.id.clone(),
                system_id: s.clone(),
                audio_ref: format!("{s}_{}.wav", t.id),
            })
        })
        .collect();
    build_plan(
        "e",
        texts,
        systems,
        renditions,
        groups,
        TaskConfig::augmented(vec![]),
        seed,
    )
    .unwrap()
}

/// (past -> base) for undoing tense in the corrective comparison.
fn base_of(lex: &Lexicon) -> HashMap<&str, &str> {
    lex.verbs
        .iter()
        .map(|(b, p)| (p.as_str(), b.as_str()))
        .collect()
}

#[test]
fn corrective_pairs_differ_in_focused_slot_only() {
    let lex = Lexicon::default_english();
    let base = base_of(&lex);
    for seed in 0..20 {
        for s in generate_qa_stimuli(&lex, 10, seed).unwrap() {
            if s.structure != StimulusStructure::Corrective {
                continue;
            }
            let q: Vec<&str> = s.question_text.trim_end_matches('?').split(' ').collect();
            let a: Vec<&str> = s.answer_text.trim_end_matches('.').split(' ').collect();
            assert_eq!(q[0], "Did");
            assert_eq!(a[0], "No,");
            let q_slots = [q[1], q[2], q[4]];
            let a_slots = [a[1], base[a[2]], a[4]];
            let differing: Vec<usize> = (0..3).filter(|&i| q_slots[i] != a_slots[i]).collect();
            let focus = FocusPosition::ALL
                .iter()
                .position(|f| *f == s.focus)
                .unwrap();
            assert_eq!(differing, [focus], "{s:?}");
        }
    }
}

#[test]
fn informational_answers_keep_question_content_words() {
    let lex = Lexicon::default_english();
    let base = base_of(&lex);
    let wh: HashSet<&str> = ["Who", "What", "did", "do", "with"].into_iter().collect();
    for s in generate_qa_stimuli(&lex, 10, 3).unwrap() {
        if s.structure != StimulusStructure::Informational {
            continue;
        }
        let answer: HashSet<String> = s
            .answer_tokens
            .iter()
            .flat_map(|t| {
                let w = t.trim_end_matches('.');
                [
                    w.to_string(),
                    base.get(w).map_or(w.to_string(), |b| b.to_string()),
                ]
            })
            .collect();
        for w in s.question_text.trim_end_matches('?').split(' ') {
            if !wh.contains(w) {
                assert!(answer.contains(w), "{w} missing from {:?}", s.answer_text);
            }
        }
    }
}

proptest! {
    #[test]
    fn stimuli_are_balanced_unique_and_deterministic(per in 1usize..20, seed in any::<u64>()) {
        let lex = Lexicon::default_english();
        let a = generate_qa_stimuli(&lex, per, seed).unwrap();
        let b = generate_qa_stimuli(&lex, per, seed).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(a.len(), per * 6);
        let mut cells: BTreeMap<_, usize> = BTreeMap::new();
        let mut tuples = HashSet::new();
        for s in &a {
            *cells.entry((s.structure, s.focus)).or_default() += 1;
            prop_assert!(tuples.insert((s.answer_text.clone(), s.structure, s.focus)));
            prop_assert_eq!(&s.answer_tokens, &prosodyeval::tokenize(&s.answer_text).unwrap());
            prop_assert!(s.focus_token_index < s.answer_tokens.len());
            prop_assert_ne!(s.answer_tokens[s.focus_token_index].as_str(), "the");
            if s.structure == StimulusStructure::Corrective {
                prop_assert_eq!(s.answer_tokens[0].as_str(), "No,");
            }
        }
        prop_assert!(cells.values().all(|&c| c == per));
    }

    #[test]
    fn plans_are_exact_balanced_latin_squares(
        k in 1usize..5, blocks in 1usize..4, per_sys in 1usize..5, seed in any::<u64>()
    ) {
        let n_groups = k * blocks;
        let n_texts = blocks * k * per_sys;
        let p = plan(n_texts, k, n_groups, seed);
        p.validate().unwrap();
        let mut all: Vec<&Page> = p.group_pages.values().flatten().collect();
        all.sort();
        let mut product: Vec<Page> = p.texts.iter().flat_map(|t| p.systems.iter().map(|s| Page {
            text_id: t.id.clone(), system_id: s.clone() })).collect();
        product.sort();
        prop_assert_eq!(all, product.iter().collect::<Vec<_>>());
        for pages in p.group_pages.values() {
            prop_assert_eq!(pages.len(), k * per_sys);
            let texts: HashSet<_> = pages.iter().map(|pg| &pg.text_id).collect();
            prop_assert_eq!(texts.len(), pages.len());
            for s in &p.systems {
                prop_assert_eq!(pages.iter().filter(|pg| &pg.system_id == s).count(), per_sys);
            }
        }
        let back: ExperimentPlan = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn error_rate_is_scale_free(marks in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 1..10)) {
        let rec = |m: &Vec<bool>| ResponseRecord {
            session_id: "s".into(), page_index: 0, text_id: "t".into(), system_id: "x".into(),
            marks: m.clone(), score: 3, error_types: vec![], other_text: String::new(),
            replay_count: 1, elapsed_ms: 0, submitted_at: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        };
        let records: Vec<ResponseRecord> = marks.iter().map(rec).collect();
        let once: Vec<&ResponseRecord> = records.iter().collect();
        let twice: Vec<&ResponseRecord> = records.iter().chain(records.iter()).collect();
        let a = stimulus_stats(StimulusKey::new("t", "x"), 5, &once).unwrap();
        let b = stimulus_stats(StimulusKey::new("t", "x"), 5, &twice).unwrap();
        prop_assert!((a.mean_error_rate - b.mean_error_rate).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.mean_error_rate));
        prop_assert!(a.per_token_mark_counts.iter().all(|&c| c as usize <= a.n_responses));
    }

    #[test]
    fn punctuation_proportion_bounds(counts in prop::collection::vec(prop::collection::vec(0u64..10, 3), 1..10)) {
        let p = plan(3, 1, 1, 0);
        // Every text is "word N here." so only the last token ends in punctuation.
        let stats: Vec<StimulusStats> = counts.iter().enumerate().map(|(i, c)| StimulusStats {
            key: StimulusKey::new(format!("t{}", i % 3), "s0"),
            mean_score: 3.0, mean_error_rate: 0.0, per_token_mark_counts: c.clone(), n_responses: 10,
        }).collect();
        if let Ok(v) = punctuation_proportion(&p, &stats) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let on_last: Vec<StimulusStats> = stats.iter().map(|s| StimulusStats {
            per_token_mark_counts: vec![0, 0, 1 + s.per_token_mark_counts[2]], ..s.clone()
        }).collect();
        prop_assert_eq!(punctuation_proportion(&p, &on_last).unwrap(), 1.0);
    }
}
