//! Deterministic shallow NLP: tokenization with a closed-class lexicon and
//! suffix heuristics, noun-phrase chunking, clause segmentation, TF-IDF and
//! an add-k smoothed n-gram language model.
//!
//! Everything here is a pure function of its inputs.

mod chunk;
mod clause;
mod lm;
mod tfidf;
mod tokenize;

pub use chunk::{extract_noun_phrases, Keyword, KeywordSet, NounPhrase};
pub use clause::{segment_clauses, ClauseSpan, COORDINATORS, SUBORDINATORS};
pub use lm::{lm_score, NGramModel};
pub use tfidf::{cosine_similarity, term_of, terms, tfidf_vector, CorpusStats, SparseVector};
pub use tokenize::{split_sentences, stem, tokenize, tokenize_with, Lexicon, Tag, Token};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("empty input")]
    EmptyInput,
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("document frequency of {term:?} is {count}, outside [1, {documents}]")]
    DocumentFrequency {
        term: String,
        count: usize,
        documents: usize,
    },
    #[error("invalid language model: {0}")]
    InvalidModel(String),
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("lexicon line {line}: {reason}")]
    LexiconLine { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

/// Jaccard overlap of noun-phrase head stems between two texts.
pub fn topic_overlap(a: &str, b: &str) -> f64 {
    let heads = |s: &str| -> std::collections::BTreeSet<String> {
        let toks = tokenize(s);
        extract_noun_phrases(&toks)
            .iter()
            .map(|np| np.head_token(&toks).stem())
            .collect()
    };
    let (ha, hb) = (heads(a), heads(b));
    let union = ha.union(&hb).count();
    if union == 0 {
        return 0.0;
    }
    ha.intersection(&hb).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_overlap_uses_heads() {
        assert_eq!(topic_overlap("a high bias", "the bias"), 1.0);
        assert_eq!(topic_overlap("run quickly", "go"), 0.0);
        assert!((topic_overlap("models and data", "a model") - 0.5).abs() < 1e-12);
    }
}
