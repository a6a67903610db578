use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::tokenize::{stem, Tag, Token};

/// A maximal `DET? ADJ* NOUN+` chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounPhrase {
    pub tokens: Range<usize>,
    /// Absolute token index of the head noun (the last noun of the chunk).
    pub head: usize,
    pub text: String,
}

impl NounPhrase {
    /// Lowercase phrase with any leading determiner dropped.
    pub fn keyword(&self, tokens: &[Token]) -> String {
        let mut words = tokens[self.tokens.clone()].iter().peekable();
        if words.peek().is_some_and(|t| t.tag == Tag::Det) {
            words.next();
        }
        words.map(|t| t.normalized.as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn head_token<'a>(&self, tokens: &'a [Token]) -> &'a Token {
        &tokens[self.head]
    }
}

pub fn extract_noun_phrases(tokens: &[Token]) -> Vec<NounPhrase> {
    let mut phrases = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i;
        if tokens[j].tag == Tag::Det {
            j += 1;
        }
        while j < tokens.len() && tokens[j].tag == Tag::Adj {
            j += 1;
        }
        let mut k = j;
        while k < tokens.len() && tokens[k].tag == Tag::Noun {
            k += 1;
        }
        if k > j {
            let text = tokens[i..k]
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            phrases.push(NounPhrase {
                tokens: i..k,
                head: k - 1,
                text,
            });
            i = k;
        } else {
            i += 1;
        }
    }
    phrases
}

const INTERROGATIVES: &[&str] = &["what", "which", "who", "whom", "whose", "why", "how", "where", "when"];

/// One keyword: a normalized noun phrase, its head, and the stems of its nouns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Keyword {
    pub text: String,
    pub head: String,
    pub terms: BTreeSet<String>,
}

/// Keywords identified in a question.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub source: String,
    keywords: BTreeMap<String, Keyword>,
}

impl KeywordSet {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            keywords: BTreeMap::new(),
        }
    }

    pub fn from_tokens(source: impl Into<String>, tokens: &[Token]) -> Self {
        let mut set = Self::new(source);
        for np in extract_noun_phrases(tokens) {
            let head = np.head_token(tokens);
            if INTERROGATIVES.contains(&head.normalized.as_str()) {
                continue;
            }
            let terms = tokens[np.tokens.clone()]
                .iter()
                .filter(|t| t.tag == Tag::Noun)
                .map(Token::stem)
                .collect();
            set.insert(Keyword {
                text: np.keyword(tokens),
                head: head.normalized.clone(),
                terms,
            });
        }
        set
    }

    /// Adds a keyword given as plain text; every word counts as a term.
    pub fn insert_text(&mut self, text: &str) {
        let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
        let Some(head) = words.last().cloned() else {
            return;
        };
        self.insert(Keyword {
            text: words.join(" "),
            head,
            terms: words.iter().map(|w| stem(w)).collect(),
        });
    }

    pub fn insert(&mut self, keyword: Keyword) {
        self.keywords.insert(keyword.text.clone(), keyword);
    }

    pub fn contains(&self, text: &str) -> bool {
        self.keywords.contains_key(&text.to_lowercase())
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Keyword> {
        self.keywords.values()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.keywords.keys().map(String::as_str)
    }

    /// True when the token's normalized form or stem matches a keyword term.
    pub fn matches_token(&self, token: &Token) -> bool {
        if token.is_punct() {
            return false;
        }
        let st = token.stem();
        self.keywords
            .values()
            .any(|k| k.terms.contains(&st) || k.terms.contains(&token.normalized))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn keywords_of(text: &str) -> Vec<String> {
        let toks = tokenize(text);
        extract_noun_phrases(&toks).iter().map(|np| np.keyword(&toks)).collect()
    }

    #[test]
    fn question_phrases() {
        assert_eq!(
            keywords_of("What is the difference between overfitting and underfitting?"),
            vec!["difference", "overfitting", "underfitting"]
        );
    }

    #[test]
    fn no_nouns() {
        assert!(keywords_of("run quickly").is_empty());
    }

    #[test]
    fn determiner_adjective_noun() {
        let toks = tokenize("a high bias");
        let nps = extract_noun_phrases(&toks);
        assert_eq!(nps.len(), 1);
        assert_eq!(nps[0].text, "a high bias");
        assert_eq!(nps[0].head_token(&toks).surface, "bias");
        assert_eq!(nps[0].tokens, 0..3);
    }

    #[test]
    fn compound_noun() {
        assert_eq!(keywords_of("Define gradient descent."), vec!["gradient descent"]);
    }

    #[test]
    fn keyword_set_matches_stems() {
        let toks = tokenize("What is the difference between overfitting and underfitting?");
        let set = KeywordSet::from_tokens("q1", &toks);
        assert_eq!(set.len(), 3);
        let other = tokenize("models are underfitted when biased");
        // "underfitted" stems to "underfitt", same as "underfitting"
        assert!(set.matches_token(&other[2]));
        assert!(!set.matches_token(&other[0]));
    }
}
