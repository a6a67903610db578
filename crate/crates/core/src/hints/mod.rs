//! Personalized hints from reference solutions: find the question's keywords,
//! pick clause spans of an expectation that avoid them, and wrap each span in
//! a discourse cue.

mod cues;

pub use cues::{default_cues, load_cues, DiscourseCue, SLOT};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{segment_clauses, split_sentences, tokenize, ClauseSpan, KeywordSet, COORDINATORS};
use crate::tutoring::Exercise;

/// Spans shorter than this many words are not used as hints.
pub const MIN_SPAN_WORDS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HintError {
    #[error("cue list is empty")]
    EmptyCues,
    #[error("no cue for introducer {0:?} and no generic cue")]
    NoMatchingCue(Option<String>),
    #[error("span contains a question keyword")]
    KeywordSpan,
    #[error("invalid cue {cue_id}: {reason}")]
    InvalidCue { cue_id: String, reason: String },
    #[error("cue file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintCandidate {
    pub text: String,
    pub exercise_id: String,
    /// Index into the exercise's expectations.
    pub expectation_index: usize,
    pub span: ClauseSpan,
    pub cue_id: String,
    pub keyword_free: bool,
}

pub fn extract_question_keywords(question: &str) -> KeywordSet {
    KeywordSet::from_tokens(question, &tokenize(question))
}

/// Keyword-free clause spans of at least [`MIN_SPAN_WORDS`] words, in order.
/// Span token ranges are relative to their sentence.
pub fn select_hint_spans(expectation: &str, keywords: &KeywordSet) -> Vec<ClauseSpan> {
    let tokens = tokenize(expectation);
    let mut out = Vec::new();
    for sentence in split_sentences(expectation) {
        let sent_tokens: Vec<_> = tokens
            .iter()
            .filter(|t| t.span.0 >= sentence.start && t.span.1 <= sentence.end)
            .cloned()
            .collect();
        for span in segment_clauses(expectation, &sent_tokens, keywords) {
            if !span.contains_keyword && span.word_count(&sent_tokens) >= MIN_SPAN_WORDS {
                out.push(span);
            }
        }
    }
    out
}

/// Text used to fill a cue: the span, minus a leading coordinating conjunction.
fn slot_text(span: &ClauseSpan) -> &str {
    match span.introducer.as_deref() {
        Some(intro) if COORDINATORS.contains(&intro) => span.text[intro.len()..].trim_start(),
        _ => &span.text,
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn punctuate(mut s: String) -> String {
    if !s.ends_with(['.', '!', '?']) {
        s.push('.');
    }
    s
}

/// Wraps `span` in the first cue whose introducer matches, else the first
/// generic cue.
pub fn assemble_hint(
    span: &ClauseSpan,
    cues: &[DiscourseCue],
    exercise_id: &str,
    expectation_index: usize,
) -> Result<HintCandidate, HintError> {
    if cues.is_empty() {
        return Err(HintError::EmptyCues);
    }
    if span.contains_keyword {
        return Err(HintError::KeywordSpan);
    }
    let intro = span.introducer.as_deref();
    let cue = cues
        .iter()
        .find(|c| c.required_introducer.is_some() && c.required_introducer.as_deref() == intro)
        .or_else(|| cues.iter().find(|c| c.is_generic()))
        .ok_or_else(|| HintError::NoMatchingCue(span.introducer.clone()))?;
    let text = punctuate(capitalize(cue.fill(slot_text(span)).trim()));
    Ok(HintCandidate {
        text,
        exercise_id: exercise_id.to_string(),
        expectation_index,
        span: span.clone(),
        cue_id: cue.cue_id.clone(),
        keyword_free: true,
    })
}

/// Runs the three steps over every expectation. Hints whose final text
/// mentions a question keyword are dropped; duplicates (case-insensitive) keep
/// the first occurrence.
pub fn generate_candidates(exercise: &Exercise, cues: &[DiscourseCue]) -> Result<Vec<HintCandidate>, HintError> {
    if cues.is_empty() {
        return Err(HintError::EmptyCues);
    }
    let keywords = extract_question_keywords(&exercise.question);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, expectation) in exercise.expectations.iter().enumerate() {
        for span in select_hint_spans(expectation, &keywords) {
            let candidate = match assemble_hint(&span, cues, &exercise.id, i) {
                Ok(c) => c,
                Err(HintError::NoMatchingCue(_)) => continue,
                Err(e) => return Err(e),
            };
            if tokenize(&candidate.text).iter().any(|t| keywords.matches_token(t)) {
                continue;
            }
            if seen.insert(candidate.text.to_lowercase()) {
                out.push(candidate);
            }
        }
    }
    Ok(out)
}
