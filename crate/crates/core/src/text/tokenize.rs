use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::ops::Range;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::TextError;

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Noun,
    Verb,
    Adj,
    Adv,
    Det,
    Pron,
    Prep,
    Conj,
    Num,
    Punct,
    Other,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Noun => "NOUN",
            Tag::Verb => "VERB",
            Tag::Adj => "ADJ",
            Tag::Adv => "ADV",
            Tag::Det => "DET",
            Tag::Pron => "PRON",
            Tag::Prep => "PREP",
            Tag::Conj => "CONJ",
            Tag::Num => "NUM",
            Tag::Punct => "PUNCT",
            Tag::Other => "OTHER",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "NOUN" => Tag::Noun,
            "VERB" => Tag::Verb,
            "ADJ" => Tag::Adj,
            "ADV" => Tag::Adv,
            "DET" => Tag::Det,
            "PRON" => Tag::Pron,
            "PREP" => Tag::Prep,
            "CONJ" => Tag::Conj,
            "NUM" => Tag::Num,
            "PUNCT" => Tag::Punct,
            "OTHER" => Tag::Other,
            other => return Err(TextError::UnknownTag(other.to_string())),
        })
    }
}

/// A word or punctuation mark with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub tag: Tag,
    /// Byte offsets into the source, `start..end`.
    pub span: (usize, usize),
}

impl Token {
    pub fn range(&self) -> Range<usize> {
        self.span.0..self.span.1
    }

    pub fn is_punct(&self) -> bool {
        self.tag == Tag::Punct
    }

    /// Suffix-stripped form used for keyword matching.
    pub fn stem(&self) -> String {
        stem(&self.normalized)
    }
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "these", "those", "each", "every", "some", "any", "no", "all", "both", "either",
    "neither", "another", "such", "its", "their", "his", "her", "our", "your", "my",
];

const PRONOUNS: &[&str] = &[
    "it",
    "they",
    "them",
    "he",
    "she",
    "him",
    "we",
    "us",
    "you",
    "i",
    "me",
    "what",
    "which",
    "who",
    "whom",
    "whose",
    "itself",
    "themselves",
    "something",
    "anything",
    "one",
];

const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "onto", "about", "over", "under", "between",
    "among", "through", "during", "without", "within", "across", "against", "along", "around", "before", "after",
    "above", "below", "behind", "beyond", "near", "per", "via", "than", "like", "toward", "towards", "upon", "versus",
    "vs",
];

const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "yet", "so", "when", "because", "if", "that", "while", "although", "though", "since",
    "whereas", "unless", "until", "where", "whether", "once", "as",
];

const VERBS: &[&str] = &[
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "am",
    "has",
    "have",
    "had",
    "having",
    "do",
    "does",
    "did",
    "done",
    "can",
    "could",
    "will",
    "would",
    "shall",
    "should",
    "may",
    "might",
    "must",
    "define",
    "defines",
    "describe",
    "describes",
    "explain",
    "explains",
    "compute",
    "computes",
    "calculate",
    "calculates",
    "find",
    "finds",
    "give",
    "gives",
    "make",
    "makes",
    "made",
    "get",
    "gets",
    "take",
    "takes",
    "use",
    "uses",
    "used",
    "run",
    "runs",
    "increase",
    "increases",
    "decrease",
    "decreases",
    "reduce",
    "reduces",
    "fit",
    "fits",
    "fail",
    "fails",
    "occur",
    "occurs",
    "happen",
    "happens",
    "minimize",
    "minimizes",
    "maximize",
    "maximizes",
    "learn",
    "learns",
    "predict",
    "predicts",
    "converge",
    "converges",
    "mean",
    "means",
    "tend",
    "tends",
    "perform",
    "performs",
    "generalize",
    "generalizes",
    "contain",
    "contains",
    "include",
    "includes",
    "depend",
    "depends",
    "become",
    "becomes",
    "seem",
    "seems",
    "help",
    "helps",
    "show",
    "shows",
    "think",
    "know",
    "let",
    "lets",
    "say",
    "says",
    "refer",
    "refers",
    "represent",
    "represents",
    "measure",
    "measures",
    "split",
    "splits",
    "call",
    "called",
    "apply",
    "applies",
    "need",
    "needs",
    "require",
    "requires",
    "lead",
    "leads",
    "cause",
    "causes",
    "memorize",
    "memorizes",
    "capture",
    "captures",
    "see",
    "sees",
    "consider",
    "remember",
    "assign",
    "assigns",
    "estimate",
    "estimates",
    "update",
    "updates",
    "add",
    "adds",
    "multiply",
    "multiplies",
    "solve",
    "solves",
    "assume",
    "assumes",
    "prevent",
    "prevents",
    "avoid",
    "avoids",
    "combine",
    "combines",
    "map",
    "maps",
    "try",
    "tries",
    "keep",
    "keeps",
    "produce",
    "produces",
    "return",
    "returns",
    "set",
    "sets",
];

const ADJECTIVES: &[&str] = &[
    "high",
    "low",
    "large",
    "small",
    "big",
    "good",
    "bad",
    "new",
    "old",
    "simple",
    "complex",
    "linear",
    "nonlinear",
    "non-linear",
    "same",
    "different",
    "many",
    "much",
    "more",
    "most",
    "less",
    "least",
    "few",
    "several",
    "other",
    "own",
    "true",
    "false",
    "important",
    "main",
    "best",
    "better",
    "worse",
    "worst",
    "whole",
    "full",
    "certain",
    "common",
    "random",
    "wrong",
    "right",
    "correct",
    "incorrect",
    "similar",
    "possible",
    "likely",
    "unlikely",
    "able",
    "free",
    "deep",
    "shallow",
    "unseen",
    "positive",
    "negative",
    "binary",
    "continuous",
    "discrete",
    "local",
    "global",
    "hidden",
    "single",
    "multiple",
    "first",
    "last",
    "next",
    "previous",
    "small",
    "squared",
    "total",
    "average",
];

const ADVERBS: &[&str] = &[
    "not",
    "very",
    "too",
    "also",
    "often",
    "always",
    "never",
    "only",
    "just",
    "then",
    "thus",
    "however",
    "therefore",
    "usually",
    "typically",
    "generally",
    "well",
    "even",
    "still",
    "here",
    "there",
    "how",
    "why",
    "rather",
    "almost",
    "already",
    "instead",
    "together",
];

const NUMBER_WORDS: &[&str] = &[
    "zero", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

/// Closed-class word list mapping lowercase words to tags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, Tag>,
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The built-in English closed-class lexicon.
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let mut lex = Lexicon::empty();
            let groups: [(&[&str], Tag); 8] = [
                (DETERMINERS, Tag::Det),
                (PRONOUNS, Tag::Pron),
                (PREPOSITIONS, Tag::Prep),
                (CONJUNCTIONS, Tag::Conj),
                (VERBS, Tag::Verb),
                (ADJECTIVES, Tag::Adj),
                (ADVERBS, Tag::Adv),
                (NUMBER_WORDS, Tag::Num),
            ];
            for (words, tag) in groups {
                for w in words {
                    lex.entries.entry((*w).to_string()).or_insert(tag);
                }
            }
            lex
        })
    }

    pub fn insert(&mut self, word: &str, tag: Tag) {
        self.entries.insert(word.to_lowercase(), tag);
    }

    pub fn get(&self, word: &str) -> Option<Tag> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `word<TAB>TAG` lines on top of the built-in lexicon. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TextError> {
        let mut lex = Lexicon::builtin().clone();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| TextError::Io(e.to_string()))?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (word, tag) = trimmed.split_once('\t').ok_or(TextError::LexiconLine {
                line: i + 1,
                reason: "expected word<TAB>TAG".into(),
            })?;
            let tag = tag.parse::<Tag>().map_err(|e| TextError::LexiconLine {
                line: i + 1,
                reason: e.to_string(),
            })?;
            lex.insert(word.trim(), tag);
        }
        Ok(lex)
    }

    fn tag_word(&self, lower: &str) -> Tag {
        if let Some(tag) = self.get(lower) {
            return tag;
        }
        if lower.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            return Tag::Num;
        }
        suffix_tag(lower)
    }
}

fn suffix_tag(w: &str) -> Tag {
    let n = w.chars().count();
    let ends = |suffixes: &[&str]| suffixes.iter().any(|s| w.ends_with(s));
    if n > 4 && w.ends_with("ly") {
        return Tag::Adv;
    }
    if n > 5 && w.ends_with("ing") {
        // bare gerunds behave as nouns in definitions ("overfitting")
        return Tag::Noun;
    }
    if ends(&[
        "tion", "sion", "ment", "ness", "ity", "ance", "ence", "ism", "ship", "ure", "ogy",
    ]) {
        return Tag::Noun;
    }
    if n > 4 && ends(&["ous", "ful", "ive", "able", "ible", "less", "ical", "ional"]) {
        return Tag::Adj;
    }
    if n > 4 && w.ends_with("ed") {
        return Tag::Verb;
    }
    if n > 4 && ends(&["ize", "ise", "ify"]) {
        return Tag::Verb;
    }
    Tag::Noun
}

/// Lowercase suffix stripping (`s`, `es`, `ing`, `ed`) for keyword matching.
/// Stems shorter than three characters are left alone.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    let long_enough = |base: &str| base.chars().count() >= 3;
    for suffix in ["ing", "ed"] {
        if let Some(base) = w.strip_suffix(suffix) {
            if long_enough(base) {
                return base.to_string();
            }
        }
    }
    if let Some(base) = w.strip_suffix("ies") {
        if long_enough(base) {
            return format!("{base}y");
        }
    }
    if let Some(base) = w.strip_suffix("es") {
        if long_enough(base) && ["s", "x", "z", "ch", "sh"].iter().any(|e| base.ends_with(e)) {
            return base.to_string();
        }
    }
    if let Some(base) = w.strip_suffix('s') {
        if long_enough(base) && !["s", "u", "i", "a"].iter().any(|e| base.ends_with(e)) {
            return base.to_string();
        }
    }
    w
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Tokenizes with the built-in lexicon.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_with(Lexicon::builtin(), text)
}

pub fn tokenize_with(lexicon: &Lexicon, text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                if is_word_char(cj) {
                    j += 1;
                } else if matches!(cj, '\'' | '-' | '.' | '\u{2019}')
                    && j + 1 < chars.len()
                    && is_word_char(chars[j + 1].1)
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            let surface = &text[start..end];
            let normalized = surface.to_lowercase();
            let tag = lexicon.tag_word(&normalized);
            tokens.push(Token {
                surface: surface.to_string(),
                normalized,
                tag,
                span: (start, end),
            });
            i = j;
        } else {
            let end = start + c.len_utf8();
            let surface = &text[start..end];
            tokens.push(Token {
                surface: surface.to_string(),
                normalized: surface.to_string(),
                tag: Tag::Punct,
                span: (start, end),
            });
            i += 1;
        }
    }
    tokens
}

const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "etc", "vs", "fig", "dr", "mr", "mrs", "al", "approx", "cf",
];

/// Splits text into sentences, returning trimmed byte ranges. A sentence ends
/// at `.`, `!` or `?` unless the preceding word is a known abbreviation or the
/// next word starts in lowercase.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let tokens = tokenize(text);
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, tok) in tokens.iter().enumerate() {
        if start.is_none() {
            start = Some(tok.span.0);
        }
        let terminal = matches!(tok.surface.as_str(), "." | "!" | "?");
        if !terminal {
            continue;
        }
        if tok.surface == "." {
            if let Some(prev) = i.checked_sub(1).map(|p| &tokens[p]) {
                if !prev.is_punct() && ABBREVIATIONS.contains(&prev.normalized.as_str()) {
                    continue;
                }
            }
            if let Some(next) = tokens.get(i + 1) {
                if next.surface.chars().next().is_some_and(|c| c.is_lowercase()) {
                    continue;
                }
            }
        }
        // swallow closing quotes/brackets that follow the terminator
        let mut end = tok.span.1;
        let mut k = i + 1;
        while let Some(t) = tokens.get(k) {
            if matches!(t.surface.as_str(), "\"" | "'" | ")" | "\u{201d}") && t.span.0 == end {
                end = t.span.1;
                k += 1;
            } else {
                break;
            }
        }
        if let Some(s) = start.take() {
            out.push(s..end);
        }
    }
    if let (Some(s), Some(last)) = (start, tokens.last()) {
        if last.span.1 > s {
            out.push(s..last.span.1);
        }
    }
    // closing-quote swallowing can leave a sentence start inside the previous one
    out.retain(|r| !r.is_empty());
    let mut merged: Vec<Range<usize>> = Vec::with_capacity(out.len());
    for r in out {
        match merged.last() {
            Some(prev) if r.start < prev.end => {}
            _ => merged.push(r),
        }
    }
    merged
}
