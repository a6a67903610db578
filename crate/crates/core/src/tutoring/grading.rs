use serde::{Deserialize, Serialize};

use super::{Answer, Exercise, Grade, TutorError};
use crate::math::{check_equivalence, interpret, lex_latex, EquivalenceVerdict, ParseContext, ParseTree};
use crate::models::FeatureResources;
use crate::text::{cosine_similarity, SparseVector};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Sampling seed for equivalence checks during grading.
pub const GRADING_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    pub grade: Grade,
    /// Best similarity to an expectation in `[0, 1]`.
    pub score: f64,
    /// Set on the math route.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<EquivalenceVerdict>,
}

/// Max TF-IDF cosine to the expectations; when either vector is zero the raw
/// term-frequency cosine is used instead.
pub fn text_similarity(attempt: &str, expectation: &str, res: &FeatureResources) -> f64 {
    let (a, e) = (res.tfidf(attempt), res.tfidf(expectation));
    if a.is_zero() || e.is_zero() {
        return cosine_similarity(
            &SparseVector::term_frequencies(attempt),
            &SparseVector::term_frequencies(expectation),
        );
    }
    cosine_similarity(&a, &e)
}

/// Parse context of a math exercise.
pub fn math_context(exercise: &Exercise) -> Result<Option<(ParseContext, ParseTree)>, TutorError> {
    let Some(m) = &exercise.math else { return Ok(None) };
    let err = |e: crate::math::MathError| TutorError::InvalidExercise {
        id: exercise.id.clone(),
        reason: format!("math expectation: {e}"),
    };
    let ctx = ParseContext::from_expectation(&lex_latex(&m.latex).map_err(err)?, &m.functions);
    let tree = interpret(&m.latex, &ctx).map_err(err)?;
    Ok(Some((ctx, tree)))
}

/// LaTeX answers, and any answer to an exercise without text expectations,
/// go through the equivalence checker; the rest are compared as text.
pub fn grade_attempt(
    answer: &Answer,
    exercise: &Exercise,
    threshold: f64,
    res: &FeatureResources,
) -> Result<Grading, TutorError> {
    let text = answer.as_str();
    if text.trim().is_empty() {
        return Err(TutorError::EmptyAttempt);
    }
    let math_route = matches!(answer, Answer::Latex(_)) || exercise.expectations.is_empty();
    if math_route {
        if let Some((ctx, expected)) = math_context(exercise)? {
            let verdict = match interpret(text, &ctx) {
                Ok(tree) => check_equivalence(&tree, &expected, GRADING_SEED).unwrap_or(EquivalenceVerdict::Ambiguous),
                // an unparsable attempt is simply wrong
                Err(_) => EquivalenceVerdict::Ambiguous,
            };
            let ok = verdict.is_equivalent();
            return Ok(Grading {
                grade: if ok { Grade::Correct } else { Grade::Incorrect },
                score: ok as u8 as f64,
                verdict: Some(verdict),
            });
        }
    }
    let score = exercise
        .expectations
        .iter()
        .map(|e| text_similarity(text, e, res))
        .fold(0.0, f64::max);
    Ok(Grading {
        grade: if score >= threshold {
            Grade::Correct
        } else {
            Grade::Incorrect
        },
        score,
        verdict: None,
    })
}
