use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::chunk::KeywordSet;
use super::tokenize::{Tag, Token};

pub const SUBORDINATORS: &[&str] = &[
    "when", "because", "if", "that", "while", "although", "though", "since", "whereas", "unless", "until", "where",
    "whether",
];

pub const COORDINATORS: &[&str] = &["and", "but", "or"];

/// A clause-level slice of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseSpan {
    pub tokens: Range<usize>,
    /// Lowercased subordinating or coordinating word that opens the span.
    pub introducer: Option<String>,
    pub contains_keyword: bool,
    /// Source text of the span without trailing punctuation.
    pub text: String,
}

impl ClauseSpan {
    pub fn word_count(&self, tokens: &[Token]) -> usize {
        tokens[self.tokens.clone()].iter().filter(|t| !t.is_punct()).count()
    }
}

fn is_split_word(tokens: &[Token], i: usize) -> bool {
    let w = tokens[i].normalized.as_str();
    if SUBORDINATORS.contains(&w) {
        return true;
    }
    if COORDINATORS.contains(&w) {
        // only coordinated clauses, i.e. a verb before the next split point
        return tokens[i + 1..]
            .iter()
            .take_while(|t| !SUBORDINATORS.contains(&t.normalized.as_str()))
            .any(|t| t.tag == Tag::Verb);
    }
    false
}

/// Splits one sentence into clause spans that partition its tokens. `text` is
/// the string the tokens were produced from.
pub fn segment_clauses(text: &str, tokens: &[Token], keywords: &KeywordSet) -> Vec<ClauseSpan> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let mut starts = vec![0];
    for i in 1..tokens.len() {
        if is_split_word(tokens, i) {
            starts.push(i);
        }
    }
    let mut spans = Vec::with_capacity(starts.len());
    for (n, &s) in starts.iter().enumerate() {
        let e = starts.get(n + 1).copied().unwrap_or(tokens.len());
        let slice = &tokens[s..e];
        let introducer = is_split_word(tokens, s).then(|| tokens[s].normalized.clone());
        let contains_keyword = slice.iter().any(|t| keywords.matches_token(t));
        let text_span = match slice.iter().rposition(|t| !t.is_punct()) {
            Some(last) => &text[slice[0].span.0..slice[last].span.1],
            None => "",
        };
        spans.push(ClauseSpan {
            tokens: s..e,
            introducer,
            contains_keyword,
            text: text_span.to_string(),
        });
    }
    spans
}
