use qcoref::data::{self, Entry};
use qcoref::train::{self, Aggregate, CompiledSet, Holdout, Hyperparams, OovPolicy};
use qcoref::{Model, ParamStore};

/// Four discourses whose predicates never repeat, so each label can be
/// memorised from its own words.
fn disjoint_cues() -> Vec<Entry> {
    vec![
        Entry::new("The students read the books.", "They were tired.", "They", "students", 1).unwrap(),
        Entry::new("The storm delayed the flight.", "It was overbooked.", "It", "storm", 0).unwrap(),
        Entry::new("The sniper shot the terrorist.", "He was well trained.", "He", "sniper", 1).unwrap(),
        Entry::new("The sailors threw themselves off the boats.", "They were in poor condition.", "They", "sailors", 0)
            .unwrap(),
    ]
}

fn small_train() -> Vec<Entry> {
    data::sample_balanced(&data::bundled_dataset(), 24, 3).unwrap()
}

#[test]
fn sllm_memorises_disjoint_cues() {
    let lex = data::bundled_lexicon();
    let set = CompiledSet::build(&disjoint_cues(), Model::Sllm, &lex).unwrap();
    let hp = Hyperparams { epochs: 500, ..Hyperparams::default() };
    let multi = train::multi_seed(&set, &hp, 15, 0).unwrap();
    let perfect = multi.runs.iter().filter(|(_, h)| h.accuracy.contains(&1.0)).count();
    assert!(perfect >= 12, "{perfect} of 15 seeds reached full accuracy");
    let agg = &multi.aggregate;
    assert!(agg.mean_loss.last().unwrap() < &agg.mean_loss[0]);
}

#[test]
fn validation_labels_are_read_once_after_training() {
    let lex = data::bundled_lexicon();
    let val = Holdout::new(data::sample_balanced(&data::bundled_dataset(), 10, 9).unwrap());
    let hp = Hyperparams { epochs: 5, ..Hyperparams::default() };
    let mut seen = Vec::new();
    let (_, history) = train::spsa_fit(&small_train(), &val, Model::Sllm, &lex, &hp, 0, &mut |r| {
        seen.push((r.epoch, val.labels_read()));
    })
    .unwrap();
    assert_eq!(seen, (0..5).map(|t| (t, 0)).collect::<Vec<_>>());
    assert_eq!(val.labels_read(), 1);
    assert_eq!(history.validation.unwrap().count, 10);
    assert_eq!(history.loss.len(), 5);
}

#[test]
fn fits_are_deterministic_per_seed() {
    let lex = data::bundled_lexicon();
    let set = CompiledSet::build(&small_train(), Model::Sllm, &lex).unwrap();
    let hp = Hyperparams { epochs: 8, ..Hyperparams::default() };
    let (p1, h1) = train::spsa_fit_compiled(&set, &hp, 5, &mut |_| {}).unwrap();
    let (p2, h2) = train::spsa_fit_compiled(&set, &hp, 5, &mut |_| {}).unwrap();
    assert_eq!(p1.to_tsv(), p2.to_tsv());
    assert_eq!(h1, h2);
    let (p3, _) = train::spsa_fit_compiled(&set, &hp, 6, &mut |_| {}).unwrap();
    assert_ne!(p1.to_tsv(), p3.to_tsv());
}

#[test]
fn minibatches_take_one_step_per_chunk() {
    let lex = data::bundled_lexicon();
    let set = CompiledSet::build(&small_train(), Model::BagOfWords, &lex).unwrap();
    let full = Hyperparams { epochs: 3, ..Hyperparams::default() };
    let whole = Hyperparams { batch_size: Some(24), ..full };
    let chunked = Hyperparams { batch_size: Some(5), ..full };
    let fit = |hp: &Hyperparams| train::spsa_fit_compiled(&set, hp, 1, &mut |_| {}).unwrap();
    // A batch as large as the set is the full-batch update.
    assert_eq!(fit(&full).0.to_tsv(), fit(&whole).0.to_tsv());
    let (_, h) = fit(&chunked);
    assert_eq!(h.loss.len(), 3);
    assert_ne!(fit(&full).0.to_tsv(), fit(&chunked).0.to_tsv());
}

#[test]
fn aggregate_of_one_run_is_that_run() {
    let lex = data::bundled_lexicon();
    let set = CompiledSet::build(&small_train(), Model::BagOfWords, &lex).unwrap();
    let hp = Hyperparams { epochs: 6, ..Hyperparams::default() };
    let one = train::multi_seed(&set, &hp, 1, 4).unwrap();
    let h = &one.runs[0].1;
    assert_eq!(one.aggregate.mean_loss, h.loss);
    assert_eq!(one.aggregate.min_accuracy, h.accuracy);
    assert_eq!(one.aggregate.max_loss, h.loss);

    let many = train::multi_seed(&set, &hp, 4, 4).unwrap();
    let histories: Vec<_> = many.runs.iter().map(|(_, h)| h.clone()).collect();
    let agg = Aggregate::of(&histories);
    for t in 0..6 {
        assert!(agg.min_loss[t] <= agg.mean_loss[t] && agg.mean_loss[t] <= agg.max_loss[t]);
        assert!(agg.min_accuracy[t] <= agg.mean_accuracy[t] && agg.mean_accuracy[t] <= agg.max_accuracy[t]);
    }
    assert_eq!(agg.to_csv().lines().count(), 7);
}

#[test]
fn random_parameters_score_at_chance() {
    let lex = data::bundled_lexicon();
    let entries = data::bundled_dataset();
    let accs: Vec<f64> = (0..5)
        .map(|seed| {
            train::evaluate(&ParamStore::new(seed), &entries, Model::Sllm, &lex, OovPolicy::RandomInit)
                .unwrap()
                .accuracy
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((mean - 0.5).abs() <= 0.1, "{accs:?}");
}

#[test]
fn strict_evaluation_rejects_unknown_words() {
    let lex = data::bundled_lexicon();
    let err = train::evaluate(&ParamStore::new(0), &small_train(), Model::Sllm, &lex, OovPolicy::Strict);
    assert!(err.is_err());
}

#[test]
fn invalid_hyperparameters_are_rejected() {
    let set = CompiledSet::build(&small_train(), Model::BagOfWords, &data::bundled_lexicon()).unwrap();
    for hp in [
        Hyperparams { a: 0.0, ..Hyperparams::default() },
        Hyperparams { c: -1.0, ..Hyperparams::default() },
        Hyperparams { batch_size: Some(0), ..Hyperparams::default() },
    ] {
        assert!(train::spsa_fit_compiled(&set, &hp, 0, &mut |_| {}).is_err(), "{hp:?}");
    }
}
