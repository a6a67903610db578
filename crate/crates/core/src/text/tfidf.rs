use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, Token};
use super::TextError;

/// Term key used by TF-IDF: the stem of a non-punctuation token.
pub fn term_of(token: &Token) -> Option<String> {
    (!token.is_punct()).then(|| token.stem())
}

pub fn terms(text: &str) -> Vec<String> {
    tokenize(text).iter().filter_map(term_of).collect()
}

/// Document frequencies over a fixed collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    document_count: usize,
    document_frequency: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn new(document_count: usize, document_frequency: BTreeMap<String, usize>) -> Result<Self, TextError> {
        if document_count == 0 {
            return Err(TextError::EmptyCorpus);
        }
        if let Some((t, &c)) = document_frequency.iter().find(|(_, &c)| c == 0 || c > document_count) {
            return Err(TextError::DocumentFrequency {
                term: t.clone(),
                count: c,
                documents: document_count,
            });
        }
        Ok(Self {
            document_count,
            document_frequency,
        })
    }

    pub fn from_documents<'a, I>(docs: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut n = 0;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            n += 1;
            let uniq: BTreeSet<String> = terms(doc).into_iter().collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        Self::new(n, df)
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    /// Document frequency; unseen terms count as 1.
    pub fn df(&self, term: &str) -> usize {
        self.document_frequency.get(term).copied().unwrap_or(1)
    }

    pub fn idf(&self, term: &str) -> f64 {
        (self.document_count as f64 / self.df(term) as f64).ln()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.document_frequency.keys().map(String::as_str)
    }
}

/// Sparse term → weight vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(pub BTreeMap<String, f64>);

impl SparseVector {
    pub fn get(&self, term: &str) -> f64 {
        self.0.get(term).copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|&w| w == 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Raw term-frequency vector.
    pub fn term_frequencies(text: &str) -> Self {
        let mut tf = BTreeMap::new();
        for t in terms(text) {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        SparseVector(tf)
    }
}

impl FromIterator<(String, f64)> for SparseVector {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        SparseVector(iter.into_iter().collect())
    }
}

/// `tf(t) · ln(N / df(t))` for every term of `text`.
pub fn tfidf_vector(text: &str, stats: &CorpusStats) -> SparseVector {
    let tf = SparseVector::term_frequencies(text);
    tf.0.into_iter()
        .map(|(t, f)| {
            let w = f * stats.idf(&t);
            (t, w)
        })
        .collect()
}

pub fn cosine_similarity(u: &SparseVector, v: &SparseVector) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let (small, large) = if u.0.len() <= v.0.len() { (u, v) } else { (v, u) };
    let dot: f64 = small.0.iter().map(|(t, w)| w * large.get(t)).sum();
    (dot / (nu * nv)).clamp(0.0, 1.0)
}
