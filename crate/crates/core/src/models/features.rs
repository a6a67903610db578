use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelTier;
use crate::hints::extract_question_keywords;
use crate::text::{
    cosine_similarity, lm_score, split_sentences, tfidf_vector, tokenize, topic_overlap, CorpusStats, NGramModel,
    SparseVector, TextError,
};
use crate::tutoring::{Event, Exercise, Grade, InteractionTurn, StudentProfile};

pub const BASELINE_FEATURES: [&str; 6] = [
    "token_length",
    "char_length",
    "keyword_overlap",
    "topic_overlap",
    "lm_score",
    "tfidf_cosine",
];

pub const SHALLOW_FEATURES: [&str; 5] = [
    "attempted",
    "proportion_correct",
    "proportion_incorrect",
    "skips",
    "mean_attempts_per_exercise",
];

pub const HISTORY_TURN_FEATURES: [&str; 4] = [
    "attempt_token_length",
    "attempt_cosine",
    "graded_correct",
    "intervention_shown",
];

/// Previous turns covered by the deep tier.
pub const HISTORY_TURNS: usize = 4;

/// Ordered feature names with an identifier and an optional tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub id: String,
    pub tier: Option<ModelTier>,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn new(id: impl Into<String>, tier: Option<ModelTier>, names: Vec<String>) -> Self {
        Self {
            id: id.into(),
            tier,
            names,
        }
    }

    /// Hint-ranking schema. Each tier's names extend the tier below.
    pub fn for_tier(tier: ModelTier) -> Self {
        let mut names: Vec<String> = BASELINE_FEATURES.iter().map(|s| s.to_string()).collect();
        if tier >= ModelTier::Shallow {
            names.extend(SHALLOW_FEATURES.iter().map(|s| s.to_string()));
        }
        if tier == ModelTier::Deep {
            for i in 1..=HISTORY_TURNS {
                names.extend(HISTORY_TURN_FEATURES.iter().map(|f| format!("turn{i}_{f}")));
            }
        }
        Self::new(format!("hint-{}", tier.name()), Some(tier), names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Hex SHA-256 of the id, tier and names.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.id.as_bytes());
        h.update(b"\n");
        h.update(self.tier.map_or("-", |t| t.name()).as_bytes());
        for n in &self.names {
            h.update(b"\n");
            h.update(n.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn named<'a>(&'a self, schema: &'a FeatureSchema) -> impl Iterator<Item = (&'a str, f64)> {
        schema.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// Corpus statistics and language model shared by feature extractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureResources {
    pub corpus: CorpusStats,
    pub lm: NGramModel,
}

impl FeatureResources {
    pub const LM_ORDER: usize = 2;
    pub const LM_K: f64 = 0.1;

    /// Builds from texts: each text is one document, each sentence one LM
    /// training sentence.
    pub fn from_texts<'a, I>(texts: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let texts: Vec<&str> = texts.into_iter().collect();
        let corpus = CorpusStats::from_documents(texts.iter().copied())?;
        let sentences: Vec<Vec<_>> = texts
            .iter()
            .flat_map(|t| split_sentences(t).into_iter().map(move |r| tokenize(&t[r])))
            .collect();
        let lm = NGramModel::train(Self::LM_ORDER, Self::LM_K, sentences.iter().map(Vec::as_slice))?;
        Ok(Self { corpus, lm })
    }

    /// Questions and text expectations of a bank.
    pub fn from_bank(bank: &[Exercise]) -> Result<Self, TextError> {
        Self::from_texts(
            bank.iter()
                .flat_map(|e| std::iter::once(e.question.as_str()).chain(e.expectations.iter().map(String::as_str))),
        )
    }

    pub fn tfidf(&self, text: &str) -> SparseVector {
        tfidf_vector(text, &self.corpus)
    }

    /// Mean log-probability, or 0 for text without words.
    pub fn lm(&self, text: &str) -> f64 {
        lm_score(&tokenize(text), &self.lm).unwrap_or(0.0)
    }
}

fn word_count(text: &str) -> usize {
    tokenize(text).iter().filter(|t| !t.is_punct()).count()
}

/// Features of `candidate` for `exercise` at `tier`. `history` is ordered
/// oldest to newest; the deep block lists the last four turns newest first
/// and pads with zeros.
pub fn extract_features(
    candidate: &str,
    exercise: &Exercise,
    profile: &StudentProfile,
    history: &[InteractionTurn],
    tier: ModelTier,
    res: &FeatureResources,
) -> FeatureVector {
    let schema = FeatureSchema::for_tier(tier);
    let mut v = Vec::with_capacity(schema.len());
    let tokens = tokenize(candidate);
    let keywords = extract_question_keywords(&exercise.question);
    let keyword_overlap = if keywords.is_empty() {
        0.0
    } else {
        let hit = keywords
            .iter()
            .filter(|k| tokens.iter().any(|t| !t.is_punct() && k.terms.contains(&t.stem())))
            .count();
        hit as f64 / keywords.len() as f64
    };
    v.push(tokens.iter().filter(|t| !t.is_punct()).count() as f64);
    v.push(candidate.chars().count() as f64);
    v.push(keyword_overlap);
    v.push(topic_overlap(candidate, &exercise.question));
    v.push(res.lm(candidate));
    v.push(cosine_similarity(&res.tfidf(candidate), &res.tfidf(&exercise.question)));
    if tier >= ModelTier::Shallow {
        v.push(profile.attempted as f64);
        v.push(profile.proportion_correct());
        v.push(profile.proportion_incorrect());
        v.push(profile.skips as f64);
        v.push(profile.mean_attempts_per_exercise());
    }
    if tier == ModelTier::Deep {
        for i in 0..HISTORY_TURNS {
            match history.len().checked_sub(i + 1).map(|j| &history[j]) {
                Some(turn) => {
                    let len = match &turn.event {
                        Event::Attempt { answer } => word_count(answer.as_str()) as f64,
                        _ => 0.0,
                    };
                    v.push(len);
                    v.push(turn.score.unwrap_or(0.0));
                    v.push((turn.grade == Some(Grade::Correct)) as u8 as f64);
                    v.push(turn.intervention.is_some() as u8 as f64);
                }
                None => v.extend([0.0; HISTORY_TURN_FEATURES.len()]),
            }
        }
    }
    debug_assert_eq!(v.len(), schema.len());
    FeatureVector {
        schema_id: schema.id,
        values: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tutoring::Answer;

    fn exercise() -> Exercise {
        Exercise {
            id: "ml-1".into(),
            question: "What is the difference between overfitting and underfitting?".into(),
            expectations: vec!["A model is underfitting when it has a high bias.".into()],
            math: None,
            tags: vec![],
            difficulty: 0.5,
        }
    }

    fn res() -> FeatureResources {
        FeatureResources::from_bank(&[exercise()]).unwrap()
    }

    #[test]
    fn schemas_are_prefixes() {
        let b = FeatureSchema::for_tier(ModelTier::Baseline);
        let s = FeatureSchema::for_tier(ModelTier::Shallow);
        let d = FeatureSchema::for_tier(ModelTier::Deep);
        assert_eq!((b.len(), s.len(), d.len()), (6, 11, 27));
        assert_eq!(&s.names[..6], &b.names[..]);
        assert_eq!(&d.names[..11], &s.names[..]);
        assert_ne!(b.hash(), s.hash());
    }

    #[test]
    fn baseline_ignores_profile() {
        let mut p = StudentProfile::new("s");
        p.attempted = 9;
        let a = extract_features(
            "Think about the case.",
            &exercise(),
            &p,
            &[],
            ModelTier::Baseline,
            &res(),
        );
        let b = extract_features(
            "Think about the case.",
            &exercise(),
            &StudentProfile::new("t"),
            &[],
            ModelTier::Baseline,
            &res(),
        );
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 6);
        assert_eq!(a.values[0], 4.0);
    }

    #[test]
    fn fresh_profile_is_zero() {
        let v = extract_features(
            "x",
            &exercise(),
            &StudentProfile::new("s"),
            &[],
            ModelTier::Shallow,
            &res(),
        );
        assert!(v.values[6..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_turn_history_is_padded() {
        let turn = |seq, text: &str, grade| InteractionTurn {
            sequence: seq,
            exercise_id: "ml-1".into(),
            attempt_index: seq as u32,
            event: Event::Attempt {
                answer: Answer::Text(text.into()),
            },
            grade: Some(grade),
            score: Some(0.25),
            intervention: None,
            helpful_rating: None,
        };
        let history = vec![
            turn(1, "one two three", Grade::Incorrect),
            turn(2, "one", Grade::Correct),
        ];
        let v = extract_features(
            "hint",
            &exercise(),
            &StudentProfile::new("s"),
            &history,
            ModelTier::Deep,
            &res(),
        );
        let block = &v.values[11..];
        assert_eq!(&block[0..4], &[1.0, 0.25, 1.0, 0.0]);
        assert_eq!(&block[4..8], &[3.0, 0.25, 0.0, 0.0]);
        assert!(block[8..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn keyword_overlap_fraction() {
        let v = extract_features(
            "Underfitting is bad.",
            &exercise(),
            &StudentProfile::new("s"),
            &[],
            ModelTier::Baseline,
            &res(),
        );
        assert!((v.values[2] - 1.0 / 3.0).abs() < 1e-12);
        assert!(v.values.iter().all(|x| x.is_finite()));
    }
}
