use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexer::{MathToken, TokenKind};
use super::parser::{ParseForest, Reading};
use super::tree::ParseTree;

/// Identifiers commonly used as function names.
pub const STANDARD_FUNCTIONS: &[&str] = &["sin", "cos", "log", "f", "g"];

const DECLARED_WEIGHT: i32 = 2;
const STANDARD_WEIGHT: i32 = 1;
const BOUND_VARIABLE_WEIGHT: i32 = -2;
const NUMERIC_ARGUMENT_WEIGHT: i32 = -1;

/// What the exercise tells us about its identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseContext {
    pub functions: BTreeSet<String>,
    pub variables: BTreeSet<String>,
}

impl ParseContext {
    pub fn new<F, V>(functions: F, variables: V) -> Self
    where
        F: IntoIterator,
        F::Item: Into<String>,
        V: IntoIterator,
        V::Item: Into<String>,
    {
        Self {
            functions: functions.into_iter().map(Into::into).collect(),
            variables: variables.into_iter().map(Into::into).collect(),
        }
    }

    /// Context of an exercise: the declared functions, plus every identifier
    /// in the expectation that is not immediately followed by `(`.
    pub fn from_expectation(tokens: &[MathToken], functions: &[String]) -> Self {
        let functions: BTreeSet<String> = functions.iter().cloned().collect();
        let variables = tokens
            .iter()
            .enumerate()
            .filter(|(i, t)| {
                t.kind == TokenKind::Ident
                    && tokens.get(i + 1).map(|n| n.kind) != Some(TokenKind::LParen)
                    && !functions.contains(&t.lexeme)
            })
            .map(|(_, t)| t.lexeme.clone())
            .collect();
        Self { functions, variables }
    }

    fn apply_score(&self, ident: &str, numeric_argument: bool) -> i32 {
        let mut score = 0;
        if self.functions.contains(ident) {
            score += DECLARED_WEIGHT;
        }
        if STANDARD_FUNCTIONS.contains(&ident) {
            score += STANDARD_WEIGHT;
        }
        if self.variables.contains(ident) {
            score += BOUND_VARIABLE_WEIGHT;
        }
        if ident.chars().count() == 1 && numeric_argument {
            score += NUMERIC_ARGUMENT_WEIGHT;
        }
        score
    }
}

/// Picks the highest-scoring reading. Only Apply readings carry a score; ties
/// prefer more Mul readings, then enumeration order.
pub fn select_parse<'a>(forest: &'a ParseForest, context: &ParseContext) -> &'a ParseTree {
    let mut best: Option<(i32, usize, usize)> = None;
    for (idx, interp) in forest.interpretations.iter().enumerate() {
        let mut score = 0;
        let mut muls = 0;
        for (site, reading) in forest.sites.iter().zip(&interp.readings) {
            match reading {
                Reading::Apply => score += context.apply_score(&site.ident, site.numeric_argument),
                Reading::Mul => muls += 1,
            }
        }
        let better = match best {
            None => true,
            Some((s, m, _)) => score > s || (score == s && muls > m),
        };
        if better {
            best = Some((score, muls, idx));
        }
    }
    let idx = best.map_or(0, |(_, _, i)| i);
    &forest.interpretations[idx].tree
}
