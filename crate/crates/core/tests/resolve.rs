use qcoref::data::{self, Entry};
use qcoref::pipeline::{
    classical_predictions, combine, discourses, gold_referents, predictions_from_csv, predictions_to_csv,
    referents_from_csv, referents_to_csv, resolve, resolve_all, split_sentences, Prediction,
};
use qcoref::train::{self, CompiledSet, Hyperparams, OovPolicy};
use qcoref::{Model, ParamStore};

const TIRED: &str = "The students read the books. They were tired.";
const OVERBOOKED: &str = "The storm delayed the flight. It was overbooked.";

/// Both readings of two discourses, trained until every entry is right.
fn trained() -> ParamStore {
    let entries = vec![
        Entry::new("The students read the books.", "They were tired.", "They", "students", 1).unwrap(),
        Entry::new("The students read the books.", "They were tired.", "They", "books", 0).unwrap(),
        Entry::new("The storm delayed the flight.", "It was overbooked.", "It", "storm", 0).unwrap(),
        Entry::new("The storm delayed the flight.", "It was overbooked.", "It", "flight", 1).unwrap(),
    ];
    let set = CompiledSet::build(&entries, Model::Sllm, &data::bundled_lexicon()).unwrap();
    let hp = Hyperparams { epochs: 500, ..Hyperparams::default() };
    let multi = train::multi_seed(&set, &hp, 8, 0).unwrap();
    let best = multi.runs.iter().find(|(_, h)| h.accuracy.last() == Some(&1.0)).expect("a seed fits four entries");
    best.0.clone()
}

#[test]
fn trained_parameters_pick_the_supported_referent() {
    let lex = data::bundled_lexicon();
    let p = trained();
    let a = resolve("a", TIRED, &p, &lex, OovPolicy::Strict).unwrap();
    assert_eq!(a.candidates, ["students", "books"]);
    assert_eq!(a.referent.as_deref(), Some("students"));
    let b = resolve("b", OVERBOOKED, &p, &lex, OovPolicy::Strict).unwrap();
    assert_eq!(b.referent.as_deref(), Some("flight"));
}

#[test]
fn the_referent_is_the_best_scored_candidate() {
    let lex = data::bundled_lexicon();
    let items: Vec<(String, String, Option<String>)> =
        discourses(&data::bundled_dataset()).into_iter().take(12).collect();
    let texts: Vec<(String, String)> = items.iter().map(|(id, t, _)| (id.clone(), t.clone())).collect();
    for seed in 0..3 {
        let preds = resolve_all(&texts, &ParamStore::new(seed), &lex, OovPolicy::RandomInit).unwrap();
        for (p, (id, _)) in preds.iter().zip(&texts) {
            assert_eq!(&p.id, id);
            assert_eq!(p.scores.len(), p.candidates.len());
            assert!(p.scores.iter().all(|s| (0.0..=1.0).contains(s)));
            let best = p.scores.iter().cloned().fold(f64::MIN, f64::max);
            let first = p.scores.iter().position(|&s| s == best).unwrap();
            assert_eq!(p.referent.as_deref(), Some(p.candidates[first].as_str()));
        }
    }
}

#[test]
fn bad_inputs_are_errors() {
    let lex = data::bundled_lexicon();
    let p = ParamStore::new(0);
    assert!(resolve("x", "The students read the books.", &p, &lex, OovPolicy::RandomInit).is_err());
    assert!(resolve("x", "The students read. They were tired. It rained.", &p, &lex, OovPolicy::RandomInit).is_err());
    assert!(
        resolve("x", "Colourless ideas sleep furiously. They were tired.", &p, &lex, OovPolicy::RandomInit).is_err()
    );
    assert!(resolve("x", TIRED, &ParamStore::new(0), &lex, OovPolicy::Strict).is_err());
}

#[test]
fn sentences_split_on_final_punctuation() {
    assert_eq!(split_sentences(TIRED), ["The students read the books.", "They were tired."]);
    assert_eq!(split_sentences("One! Two? three"), ["One!", "Two?", "three"]);
    assert!(split_sentences("  ").is_empty());
}

#[test]
fn discourses_group_entries_by_sentence_pair() {
    let entries = data::bundled_dataset();
    let d = discourses(&entries);
    let pairs: std::collections::HashSet<_> = entries.iter().map(|e| (&e.s1, &e.s2)).collect();
    assert_eq!(d.len(), pairs.len());
    // Each pair has at most one supported referent, so golds match positives.
    let positives = entries.iter().filter(|e| e.label == 1).count();
    assert_eq!(d.iter().filter(|(_, _, gold)| gold.is_some()).count(), positives);
    assert_eq!(d[0].0, "1");
}

#[test]
fn prediction_files_round_trip() {
    let lex = data::bundled_lexicon();
    let texts = vec![("7".to_string(), TIRED.to_string()), ("8".to_string(), OVERBOOKED.to_string())];
    let mut preds = resolve_all(&texts, &ParamStore::new(2), &lex, OovPolicy::RandomInit).unwrap();
    preds.push(Prediction { id: "9".into(), referent: None, candidates: vec![], scores: vec![] });
    let back = predictions_from_csv(&predictions_to_csv(&preds).unwrap()).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in preds.iter().zip(&back) {
        assert_eq!((&a.id, &a.referent), (&b.id, &b.referent));
    }
    let rows = vec![("1".to_string(), Some("the students".to_string())), ("2".to_string(), None)];
    assert_eq!(referents_from_csv(&referents_to_csv(&rows).unwrap()).unwrap(), rows);
}

#[test]
fn combine_checks_coverage() {
    let gold = vec![("1".to_string(), "students".to_string()), ("2".to_string(), "flight".to_string())];
    let q = classical_predictions(&[("1".into(), Some("books".into())), ("2".into(), Some("flight".into()))]);
    let c = classical_predictions(&[("1".into(), Some("students".into())), ("2".into(), None)]);
    let (out, report) = combine(&q, &c, &gold).unwrap();
    let refs: Vec<_> = out.iter().map(|p| p.referent.as_deref()).collect();
    assert_eq!(refs, [Some("students"), Some("flight")]);
    assert_eq!(report.replaced, 1);
    assert_eq!(report.combined.f1, 1.0);
    assert_eq!(report.classical.empty, 1);
    assert!(combine(&q[..1], &c, &gold).is_err());
    let dup = vec![c[0].clone(), c[0].clone()];
    assert!(combine(&q, &dup, &gold).is_err());
}

#[test]
fn gold_is_completed_from_negative_entries() {
    let lex = data::bundled_lexicon();
    let entries = vec![
        Entry::new("The students read the books.", "They were tired.", "They", "books", 0).unwrap(),
        Entry::new("The storm delayed the flight.", "It was overbooked.", "It", "flight", 1).unwrap(),
        Entry::new("The storm delayed the flight.", "It was overbooked.", "It", "storm", 0).unwrap(),
    ];
    let texts: Vec<(String, String)> = discourses(&entries).into_iter().map(|(id, t, _)| (id, t)).collect();
    let preds = resolve_all(&texts, &ParamStore::new(0), &lex, OovPolicy::RandomInit).unwrap();
    let gold = gold_referents(&entries, &preds);
    assert_eq!(gold, [("1".to_string(), Some("students".to_string())), ("2".to_string(), Some("flight".to_string()))]);
}
