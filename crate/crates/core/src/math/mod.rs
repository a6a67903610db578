//! LaTeX equations: lexing, ambiguity-aware parsing, parse selection,
//! canonical forms, equivalence checking, and gap/diff hints.

mod canon;
mod diff;
mod equiv;
mod gap;
mod lexer;
mod parser;
mod render;
mod select;
mod tree;

pub use canon::{canonicalize, CanonicalForm};
pub use diff::{diff_trees, DiffHint, DiffKind};
pub use equiv::{
    check_equivalence, check_equivalence_with, evaluate, numeric_agreement, EquivalenceVerdict, SamplingConfig,
};
pub use gap::{blankable_leaves, make_gap_hint, BlankingPolicy, GapHint};
pub use lexer::{lex_latex, MathToken, TokenKind, COMMANDS};
pub use parser::{parse_forest, parse_latex, AmbiguitySite, Interpretation, ParseForest, Reading, AMBIGUITY_CAP};
pub use render::{render_latex, render_with_slots, SLOT};
pub use select::{select_parse, ParseContext, STANDARD_FUNCTIONS};
pub use tree::{ParseTree, EVALUABLE_FUNCTIONS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MathError {
    #[error("unbalanced brace at position {position}")]
    UnbalancedBrace { position: usize },
    #[error("unexpected character {ch:?} at position {position}")]
    UnexpectedChar { ch: char, position: usize },
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("empty input")]
    EmptyInput,
    #[error("ambiguity cap exceeded ({sites} ambiguous sites)")]
    AmbiguityCap { sites: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("no blankable leaf")]
    NoBlankableLeaf,
    #[error("gap hint expects {expected} answers, got {found}")]
    AnswerCount { expected: usize, found: usize },
}

/// Parses `latex` and picks the most likely reading under `context`.
pub fn interpret(latex: &str, context: &ParseContext) -> Result<ParseTree, MathError> {
    let forest = parse_latex(latex)?;
    Ok(select_parse(&forest, context).clone())
}
