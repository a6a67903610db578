//! Encyclopedia explanations from an offline article corpus: first sentences
//! as extracted explanations, pronoun-resolved body sentences as generated
//! ones, and a classifier that picks the best.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{FeatureResources, FeatureSchema, FeatureVector, ModelError, TrainedModel, TrainingExample};
use crate::text::{cosine_similarity, extract_noun_phrases, split_sentences, stem, tokenize, Tag, TextError, Token};

/// Candidates scoring below this are never shown.
pub const QUALITY_THRESHOLD: f64 = 0.5;

const LEADING_PRONOUNS: [&str; 3] = ["it", "this", "they"];

pub const EXPLANATION_FEATURES: [&str; 5] = [
    "token_length",
    "tfidf_cosine",
    "lm_score",
    "capital_density",
    "keyword_position",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WikiError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("article {0:?} has no sentences")]
    EmptyArticle(String),
    #[error("corpus has no usable articles")]
    EmptyCorpus,
    #[error("synonym table: {0}")]
    Synonyms(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiArticle {
    pub title: String,
    pub sentences: Vec<String>,
    /// Number of leading sentences that make up the first paragraph.
    pub first_paragraph: usize,
    pub outlinks: BTreeSet<String>,
    pub domain_tags: Vec<String>,
}

#[derive(Deserialize)]
struct RawArticle {
    title: String,
    text: String,
    #[serde(default)]
    links: Vec<String>,
    #[serde(default)]
    tags: Vec<String>,
}

fn sentences_of(text: &str) -> Vec<String> {
    split_sentences(text).into_iter().map(|r| text[r].to_string()).collect()
}

impl WikiArticle {
    /// Splits `text` into sentences; the first paragraph ends at the first
    /// blank line.
    pub fn from_text(title: &str, text: &str, outlinks: BTreeSet<String>, domain_tags: Vec<String>) -> Self {
        let (first, rest) = match text.find("\n\n") {
            Some(i) => (&text[..i], &text[i..]),
            None => (text, ""),
        };
        let mut sentences = sentences_of(first);
        let first_paragraph = sentences.len();
        sentences.extend(sentences_of(rest));
        Self {
            title: title.trim().to_string(),
            sentences,
            first_paragraph,
            outlinks,
            domain_tags,
        }
    }

    fn lead(&self) -> String {
        let mut s = self.title.clone();
        for sent in &self.sentences[..self.first_paragraph] {
            s.push_str(". ");
            s.push_str(sent);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExplanationKind {
    Extracted,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationCandidate {
    pub text: String,
    pub kind: ExplanationKind,
    pub title: String,
    /// Inclusive sentence indices the text came from.
    pub sentences: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
}

/// Articles indexed by title terms and first-paragraph noun phrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleIndex {
    pub articles: Vec<WikiArticle>,
    pub keywords: BTreeMap<String, Vec<usize>>,
    pub synonyms: BTreeMap<String, Vec<String>>,
    pub resources: FeatureResources,
    /// Articles skipped during ingestion because they had no text.
    pub warnings: usize,
}

fn index_keys(text: &str) -> BTreeSet<String> {
    let tokens = tokenize(text);
    let mut keys = BTreeSet::new();
    for np in extract_noun_phrases(&tokens) {
        keys.insert(np.keyword(&tokens));
        keys.insert(np.head_token(&tokens).normalized.clone());
    }
    keys
}

impl ArticleIndex {
    pub fn build(articles: Vec<WikiArticle>, warnings: usize) -> Result<Self, WikiError> {
        if articles.is_empty() {
            return Err(WikiError::EmptyCorpus);
        }
        let mut keywords: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, a) in articles.iter().enumerate() {
            let mut keys = index_keys(&a.lead());
            keys.insert(a.title.to_lowercase());
            for k in keys {
                keywords.entry(k).or_default().push(i);
            }
        }
        let texts: Vec<String> = articles.iter().map(|a| a.sentences.join(" ")).collect();
        let resources = FeatureResources::from_texts(texts.iter().map(String::as_str))?;
        Ok(Self {
            articles,
            keywords,
            synonyms: BTreeMap::new(),
            resources,
            warnings,
        })
    }

    pub fn with_synonyms(mut self, synonyms: BTreeMap<String, Vec<String>>) -> Self {
        self.synonyms = synonyms
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v.into_iter().map(|s| s.to_lowercase()).collect()))
            .collect();
        self
    }

    /// Articles listed under `keyword` or one of its synonyms, in corpus order.
    pub fn lookup(&self, keyword: &str) -> Vec<&WikiArticle> {
        let k = keyword.trim().to_lowercase();
        let mut ids = BTreeSet::new();
        let alts = self.synonyms.get(&k).into_iter().flatten();
        for key in std::iter::once(&k).chain(alts) {
            if let Some(v) = self.keywords.get(key) {
                ids.extend(v.iter().copied());
            }
        }
        ids.into_iter().map(|i| &self.articles[i]).collect()
    }

    pub fn article(&self, title: &str) -> Option<&WikiArticle> {
        self.articles.iter().find(|a| a.title.eq_ignore_ascii_case(title))
    }
}

/// Reads the JSONL corpus. Articles with empty text are skipped and counted.
pub fn ingest_corpus<R: BufRead>(reader: R) -> Result<ArticleIndex, WikiError> {
    let mut articles = Vec::new();
    let mut warnings = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| WikiError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawArticle = serde_json::from_str(&line).map_err(|e| WikiError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        let article = WikiArticle::from_text(&raw.title, &raw.text, raw.links.into_iter().collect(), raw.tags);
        if article.sentences.is_empty() {
            warnings += 1;
            continue;
        }
        articles.push(article);
    }
    ArticleIndex::build(articles, warnings)
}

/// Reads a JSON object mapping a term to its synonyms.
pub fn load_synonyms<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<String>>, WikiError> {
    serde_json::from_reader(reader).map_err(|e| WikiError::Synonyms(e.to_string()))
}

pub fn extract_explanation(article: &WikiArticle) -> Result<ExplanationCandidate, WikiError> {
    let first = article
        .sentences
        .first()
        .ok_or_else(|| WikiError::EmptyArticle(article.title.clone()))?;
    Ok(ExplanationCandidate {
        text: first.clone(),
        kind: ExplanationKind::Extracted,
        title: article.title.clone(),
        sentences: (0, 0),
        features: None,
        quality: None,
    })
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn keyword_stems(keyword: &str) -> Vec<String> {
    keyword.split_whitespace().map(|w| stem(&w.to_lowercase())).collect()
}

fn mentions(tokens: &[Token], stems: &[String]) -> bool {
    !stems.is_empty()
        && stems
            .iter()
            .all(|s| tokens.iter().any(|t| !t.is_punct() && &t.stem() == s))
}

/// Replaces a leading `It`, `This` or `They` used as a pronoun (not followed
/// by a noun, adjective or determiner) with the keyword.
pub fn substitute_pronoun(sentence: &str, keyword: &str) -> Option<String> {
    let tokens = tokenize(sentence);
    let first = tokens.first()?;
    if !LEADING_PRONOUNS.contains(&first.normalized.as_str()) {
        return None;
    }
    if tokens
        .get(1)
        .is_some_and(|t| matches!(t.tag, Tag::Noun | Tag::Adj | Tag::Det))
    {
        return None;
    }
    Some(format!("{}{}", capitalize(keyword.trim()), &sentence[first.span.1..]))
}

/// Body sentences about `keyword`: sentences mentioning it verbatim (by stem)
/// and sentences opening with a pronoun, which is replaced by the keyword.
/// A qualifying sentence followed by a pronoun-led sentence also yields the
/// two-sentence window.
pub fn generate_candidates(article: &WikiArticle, keyword: &str) -> Vec<ExplanationCandidate> {
    let stems = keyword_stems(keyword);
    let resolved: Vec<Option<String>> = article
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 {
                return None;
            }
            if let Some(sub) = substitute_pronoun(s, keyword) {
                return Some(sub);
            }
            mentions(&tokenize(s), &stems).then(|| s.clone())
        })
        .collect();
    let make = |text: String, range: (usize, usize)| ExplanationCandidate {
        text,
        kind: ExplanationKind::Generated,
        title: article.title.clone(),
        sentences: range,
        features: None,
        quality: None,
    };
    let mut out = Vec::new();
    for (i, text) in resolved.iter().enumerate().skip(1) {
        let Some(text) = text else { continue };
        out.push(make(text.clone(), (i, i)));
        if let Some(next) = article.sentences.get(i + 1) {
            if substitute_pronoun(next, keyword).is_some() {
                out.push(make(format!("{text} {next}"), (i, i + 1)));
            }
        }
    }
    out
}

pub fn explanation_schema() -> FeatureSchema {
    FeatureSchema::new(
        "explanation",
        None,
        EXPLANATION_FEATURES.iter().map(|s| s.to_string()).collect(),
    )
}

/// Length, TF-IDF cosine to the keyword, LM score, share of capitalized
/// words after the first, and relative position of the first keyword word
/// (1 when absent).
pub fn explanation_features(text: &str, keyword: &str, res: &FeatureResources) -> FeatureVector {
    let tokens: Vec<Token> = tokenize(text).into_iter().filter(|t| !t.is_punct()).collect();
    let n = tokens.len();
    let capitals = tokens
        .iter()
        .skip(1)
        .filter(|t| t.surface.chars().next().is_some_and(char::is_uppercase))
        .count();
    let stems = keyword_stems(keyword);
    let position = tokens
        .iter()
        .position(|t| stems.contains(&t.stem()))
        .map_or(1.0, |p| p as f64 / n.max(1) as f64);
    FeatureVector {
        schema_id: "explanation".into(),
        values: vec![
            n as f64,
            cosine_similarity(&res.tfidf(text), &res.tfidf(keyword)),
            res.lm(text),
            if n > 1 { capitals as f64 / (n - 1) as f64 } else { 0.0 },
            position,
        ],
    }
}

/// All candidates for `keyword` from every matching article.
pub fn candidates_for(keyword: &str, index: &ArticleIndex) -> Vec<ExplanationCandidate> {
    let mut out = Vec::new();
    for a in index.lookup(keyword) {
        if let Ok(e) = extract_explanation(a) {
            out.push(e);
        }
        out.extend(generate_candidates(a, keyword));
    }
    out
}

/// Best candidate with quality at least [`QUALITY_THRESHOLD`]. Ties prefer
/// extracted candidates, then shorter and lexicographically smaller text.
pub fn score_and_select(
    keyword: &str,
    index: &ArticleIndex,
    model: &TrainedModel,
) -> Result<Option<ExplanationCandidate>, WikiError> {
    let mut best: Option<ExplanationCandidate> = None;
    for mut c in candidates_for(keyword, index) {
        let v = explanation_features(&c.text, keyword, &index.resources);
        let q = model.score(&v)?;
        c.features = Some(v);
        c.quality = Some(q);
        if q < QUALITY_THRESHOLD {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let bq = b.quality.unwrap_or(0.0);
                q.total_cmp(&bq)
                    .then(b.kind.cmp(&c.kind))
                    .then(b.text.len().cmp(&c.text.len()))
                    .then_with(|| b.text.cmp(&c.text))
                    .is_gt()
            }
        };
        if better {
            best = Some(c);
        }
    }
    Ok(best)
}

/// Labelled classifier data: each article's first sentence is positive and
/// every generated candidate for its title is negative.
pub fn training_set(index: &ArticleIndex) -> Vec<TrainingExample> {
    let mut out = Vec::new();
    for a in &index.articles {
        let keyword = a.title.to_lowercase();
        if let Ok(e) = extract_explanation(a) {
            out.push(TrainingExample::new(
                explanation_features(&e.text, &keyword, &index.resources).values,
                true,
            ));
        }
        for c in generate_candidates(a, &keyword) {
            out.push(TrainingExample::new(
                explanation_features(&c.text, &keyword, &index.resources).values,
                false,
            ));
        }
    }
    out
}
