//! Invariants of tokenization, hint assembly and the classifiers.

use proptest::prelude::*;
use tutorloop::hints::{default_cues, extract_question_keywords, generate_candidates};
use tutorloop::models::*;
use tutorloop::text::*;
use tutorloop::tutoring::Exercise;

fn sentence() -> impl Strategy<Value = String> {
    let words = prop::sample::select(vec![
        "a",
        "model",
        "is",
        "underfitting",
        "when",
        "it",
        "has",
        "high",
        "bias",
        "because",
        "the",
        "data",
        "are",
        "noisy",
        "and",
        "if",
        "learning",
        "rate",
        "too",
        "large",
        "variance",
        "overfitting",
        "ÉTÉ",
        ",",
        "(",
        ")",
        "3.5",
        "don't",
    ]);
    prop::collection::vec(words, 1..20).prop_map(|ws| {
        let mut s = ws.join(" ");
        s.push('.');
        s
    })
}

fn examples() -> impl Strategy<Value = Vec<TrainingExample>> {
    prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 3), any::<bool>()), 12..60)
        .prop_map(|rows| rows.into_iter().map(|(x, y)| TrainingExample::new(x, y)).collect())
        .prop_filter("both classes", |ex: &Vec<TrainingExample>| {
            let pos = ex.iter().filter(|e| e.label == 1).count();
            pos >= 2 && pos + 2 <= ex.len()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn token_spans_slice_the_source(s in sentence()) {
        let mut end = 0;
        for t in tokenize(&s) {
            prop_assert!(t.span.0 >= end);
            prop_assert_eq!(&s[t.range()], t.surface.as_str());
            end = t.span.1;
        }
    }

    #[test]
    fn hints_come_from_their_expectation(s in sentence()) {
        let exercise = Exercise {
            id: "e".into(),
            question: "What is the difference between overfitting and underfitting?".into(),
            expectations: vec![s.clone()],
            math: None,
            tags: vec![],
            difficulty: 0.5,
        };
        let keywords = extract_question_keywords(&exercise.question);
        for h in generate_candidates(&exercise, &default_cues()).unwrap() {
            prop_assert!(s.contains(&h.span.text));
            // a leading coordinator is dropped and the first letter capitalized
            let body = match h.span.introducer.as_deref() {
                Some(c) if COORDINATORS.contains(&c) => h.span.text[c.len()..].trim_start(),
                _ => h.span.text.as_str(),
            };
            prop_assert!(h.text.to_lowercase().contains(&body.to_lowercase()), "{} / {}", h.text, body);
            prop_assert!(h.text.ends_with('.'));
            prop_assert!(!keywords.texts().any(|k| h.span.text.to_lowercase().split(' ').any(|w| w == k)));
        }
    }

    #[test]
    fn similarity_is_bounded(a in sentence(), b in sentence()) {
        let stats = CorpusStats::from_documents([a.as_str(), b.as_str()]).unwrap();
        let (u, v) = (tfidf_vector(&a, &stats), tfidf_vector(&b, &stats));
        let c = cosine_similarity(&u, &v);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        prop_assert!((c - cosine_similarity(&v, &u)).abs() < 1e-12);
        let o = topic_overlap(&a, &b);
        prop_assert!((0.0..=1.0).contains(&o));
    }

    #[test]
    fn probabilities_stay_in_range(ex in examples(), seed in any::<u64>(), probe in prop::collection::vec(-9.0f64..9.0, 3)) {
        let tree = train_decision_tree(&ex, &TreeParams::default(), seed).unwrap();
        let p = tree.predict_proba(&probe);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(tree.depth() <= TreeParams::default().max_depth);
        let params = ForestParams { n_trees: 5, ..ForestParams::default() };
        let a = train_random_forest(&ex, &params, seed).unwrap();
        let b = train_random_forest(&ex, &params, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!((0.0..=1.0).contains(&a.predict_proba(&probe)));
    }

    #[test]
    fn oversampling_keeps_originals(ex in examples(), seed in any::<u64>(), ratio in 0.5f64..2.0) {
        let out = smote_oversample(&ex, 3, ratio, seed).unwrap();
        prop_assert_eq!(&out[..ex.len()], &ex[..]);
        let pos = ex.iter().filter(|e| e.label == 1).count();
        let minority_label = u8::from(pos <= ex.len() - pos);
        prop_assert!(out[ex.len()..].iter().all(|e| e.label == minority_label));
    }

    #[test]
    fn folds_partition_the_data(ex in examples(), k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= ex.len());
        let report = cross_validate(&ex, k, &TreeTrainer::default(), seed).unwrap();
        prop_assert_eq!(report.folds.len(), k);
        prop_assert_eq!(report.folds.iter().map(|f| f.size).sum::<usize>(), ex.len());
        let (lo, hi) = (ex.len() / k, ex.len().div_ceil(k));
        prop_assert!(report.folds.iter().all(|f| f.size == lo || f.size == hi));
        prop_assert!(report.accuracy.lower <= report.accuracy.mean && report.accuracy.mean <= report.accuracy.upper);
    }
}
