use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::Token;
use super::TextError;

const BOS: &str = "<s>";

#[derive(Serialize, Deserialize)]
struct RawModel {
    order: usize,
    k: f64,
    counts: BTreeMap<String, u64>,
}

/// Add-k smoothed n-gram language model over normalized word forms.
///
/// Only full-order n-gram counts are stored; context totals and the
/// vocabulary are derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct NGramModel {
    order: usize,
    k: f64,
    counts: BTreeMap<String, u64>,
    context_totals: HashMap<String, u64>,
    vocabulary: BTreeSet<String>,
}

impl TryFrom<RawModel> for NGramModel {
    type Error = TextError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        Self::from_counts(raw.order, raw.k, raw.counts)
    }
}

impl From<NGramModel> for RawModel {
    fn from(m: NGramModel) -> Self {
        RawModel {
            order: m.order,
            k: m.k,
            counts: m.counts,
        }
    }
}

fn words(tokens: &[Token]) -> Vec<&str> {
    tokens
        .iter()
        .filter(|t| !t.is_punct())
        .map(|t| t.normalized.as_str())
        .collect()
}

fn padded<'a>(order: usize, ws: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![BOS; order - 1];
    v.extend_from_slice(ws);
    v
}

impl NGramModel {
    pub fn from_counts(order: usize, k: f64, counts: BTreeMap<String, u64>) -> Result<Self, TextError> {
        if order == 0 {
            return Err(TextError::InvalidModel("order must be at least 1".into()));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(TextError::InvalidModel("smoothing constant must be positive".into()));
        }
        let mut context_totals = HashMap::new();
        let mut vocabulary = BTreeSet::new();
        for (gram, &c) in &counts {
            let parts: Vec<&str> = gram.split(' ').collect();
            if parts.len() != order {
                return Err(TextError::InvalidModel(format!(
                    "n-gram {gram:?} does not have order {order}"
                )));
            }
            if c == 0 {
                return Err(TextError::InvalidModel(format!("n-gram {gram:?} has zero count")));
            }
            let (ctx, w) = parts.split_at(order - 1);
            *context_totals.entry(ctx.join(" ")).or_insert(0) += c;
            vocabulary.insert(w[0].to_string());
        }
        Ok(Self {
            order,
            k,
            counts,
            context_totals,
            vocabulary,
        })
    }

    /// Trains on tokenized sentences; punctuation is ignored.
    pub fn train<'a, I>(order: usize, k: f64, sentences: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = &'a [Token]>,
    {
        if order == 0 {
            return Err(TextError::InvalidModel("order must be at least 1".into()));
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for sentence in sentences {
            let ws = words(sentence);
            let seq = padded(order, &ws);
            for gram in seq.windows(order) {
                *counts.entry(gram.join(" ")).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(TextError::InvalidModel("no training tokens".into()));
        }
        Self::from_counts(order, k, counts)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.k
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    fn log_prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx = context.join(" ");
        let gram = if ctx.is_empty() {
            word.to_string()
        } else {
            format!("{ctx} {word}")
        };
        let c = self.counts.get(&gram).copied().unwrap_or(0) as f64;
        let total = self.context_totals.get(&ctx).copied().unwrap_or(0) as f64;
        // one extra slot for unseen words
        let v = (self.vocabulary.len() + 1) as f64;
        ((c + self.k) / (total + self.k * v)).ln()
    }

    /// Mean per-token log-probability of the non-punctuation tokens.
    pub fn score(&self, tokens: &[Token]) -> Result<f64, TextError> {
        let ws = words(tokens);
        if ws.is_empty() {
            return Err(TextError::EmptyInput);
        }
        let seq = padded(self.order, &ws);
        let total: f64 = seq
            .windows(self.order)
            .map(|g| self.log_prob(&g[..self.order - 1], g[self.order - 1]))
            .sum();
        Ok(total / ws.len() as f64)
    }
}

/// Mean per-token log-probability of `tokens` under `model`.
pub fn lm_score(tokens: &[Token], model: &NGramModel) -> Result<f64, TextError> {
    model.score(tokens)
}
