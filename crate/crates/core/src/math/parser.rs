use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;

use super::lexer::{MathToken, TokenKind};
use super::tree::ParseTree;
use super::MathError;

/// Maximum number of readings kept for one expression.
pub const AMBIGUITY_CAP: usize = 16;

/// How an `identifier(` site was read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reading {
    Apply,
    Mul,
}

/// An identifier immediately followed by `(`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguitySite {
    pub ident: String,
    pub token_index: usize,
    /// The parenthesized argument contains no identifiers.
    pub numeric_argument: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    pub tree: ParseTree,
    /// One reading per entry of [`ParseForest::sites`].
    pub readings: Vec<Reading>,
}

/// All readings of an expression, Apply-first in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseForest {
    pub sites: Vec<AmbiguitySite>,
    pub interpretations: Vec<Interpretation>,
}

impl ParseForest {
    pub fn len(&self) -> usize {
        self.interpretations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interpretations.is_empty()
    }

    pub fn trees(&self) -> impl Iterator<Item = &ParseTree> {
        self.interpretations.iter().map(|i| &i.tree)
    }

    pub fn contains(&self, tree: &ParseTree) -> bool {
        self.trees().any(|t| t == tree)
    }

    /// Human-readable notes for one interpretation, e.g. "y read as function".
    pub fn notes(&self, index: usize) -> Vec<String> {
        let Some(interp) = self.interpretations.get(index) else {
            return Vec::new();
        };
        self.sites
            .iter()
            .zip(&interp.readings)
            .map(|(site, r)| match r {
                Reading::Apply => format!("{} read as function", site.ident),
                Reading::Mul => format!("{} read as factor", site.ident),
            })
            .collect()
    }
}

fn find_sites(tokens: &[MathToken]) -> Vec<AmbiguitySite> {
    let mut sites = Vec::new();
    for i in 0..tokens.len().saturating_sub(1) {
        if tokens[i].kind == TokenKind::Ident && tokens[i + 1].kind == TokenKind::LParen {
            let mut depth = 0usize;
            let mut numeric = true;
            for t in &tokens[i + 1..] {
                match t.kind {
                    TokenKind::LParen => depth += 1,
                    TokenKind::RParen => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    TokenKind::Ident => numeric = false,
                    _ => {}
                }
            }
            sites.push(AmbiguitySite {
                ident: tokens[i].lexeme.clone(),
                token_index: i,
                numeric_argument: numeric,
            });
        }
    }
    sites
}

/// Parses every reading of the token stream.
pub fn parse_forest(tokens: &[MathToken]) -> Result<ParseForest, MathError> {
    if tokens.is_empty() {
        return Err(MathError::EmptyInput);
    }
    let sites = find_sites(tokens);
    if sites.len() >= usize::BITS as usize || 1usize << sites.len() > AMBIGUITY_CAP {
        return Err(MathError::AmbiguityCap { sites: sites.len() });
    }
    let n = sites.len();
    let mut interpretations: Vec<Interpretation> = Vec::new();
    let mut first_err = None;
    for mask in 0..(1usize << n) {
        // site 0 is the most significant bit; a clear bit means Apply
        let readings: Vec<Reading> = (0..n)
            .map(|s| {
                if mask >> (n - 1 - s) & 1 == 0 {
                    Reading::Apply
                } else {
                    Reading::Mul
                }
            })
            .collect();
        let choices: HashMap<usize, Reading> = sites.iter().zip(&readings).map(|(s, r)| (s.token_index, *r)).collect();
        match Parser::new(tokens, &choices).parse() {
            Ok(tree) => {
                if !interpretations.iter().any(|i| i.tree == tree) {
                    interpretations.push(Interpretation { tree, readings });
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if interpretations.is_empty() {
        return Err(first_err.unwrap_or(MathError::EmptyInput));
    }
    Ok(ParseForest { sites, interpretations })
}

/// Lexes and parses in one step.
pub fn parse_latex(input: &str) -> Result<ParseForest, MathError> {
    parse_forest(&super::lex_latex(input)?)
}

const FUNCTION_COMMANDS: &[&str] = &["sin", "cos", "tan", "log", "ln", "exp"];

struct Parser<'a> {
    tokens: &'a [MathToken],
    pos: usize,
    choices: &'a HashMap<usize, Reading>,
}

fn number_value(lexeme: &str) -> Result<BigRational, MathError> {
    let bad = || MathError::InvalidNumber(lexeme.to_string());
    match lexeme.split_once('.') {
        None => Ok(BigRational::from_integer(
            BigInt::from_str_radix(lexeme, 10).map_err(|_| bad())?,
        )),
        Some((int, frac)) => {
            let digits = format!("{int}{frac}");
            let numer = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
            let denom = num_traits::pow(BigInt::from(10), frac.len());
            Ok(BigRational::new(numer, denom))
        }
    }
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [MathToken], choices: &'a HashMap<usize, Reading>) -> Self {
        Self {
            tokens,
            pos: 0,
            choices,
        }
    }

    fn peek(&self) -> Option<&'a MathToken> {
        self.tokens.get(self.pos)
    }

    fn position(&self) -> usize {
        self.peek()
            .map_or_else(|| self.tokens.last().map_or(0, |t| t.span.1), |t| t.span.0)
    }

    fn error(&self, message: impl Into<String>) -> MathError {
        MathError::Syntax {
            position: self.position(),
            message: message.into(),
        }
    }

    fn peek_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn peek_kind(&self, kind: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == kind)
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), MathError> {
        if self.peek_kind(kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn parse(mut self) -> Result<ParseTree, MathError> {
        let lhs = self.sum()?;
        let tree = if self.peek_op("=") {
            self.pos += 1;
            let rhs = self.sum()?;
            ParseTree::equals(lhs, rhs)
        } else {
            lhs
        };
        if self.pos < self.tokens.len() {
            return Err(self.error("unexpected token"));
        }
        Ok(tree)
    }

    fn sum(&mut self) -> Result<ParseTree, MathError> {
        let mut acc = self.product()?;
        let mut open_add = false;
        loop {
            if self.peek_op("+") {
                self.pos += 1;
                let rhs = self.product()?;
                match (&mut acc, open_add) {
                    (ParseTree::Add(cs), true) => cs.push(rhs),
                    _ => {
                        acc = ParseTree::Add(vec![acc, rhs]);
                        open_add = true;
                    }
                }
            } else if self.peek_op("-") {
                self.pos += 1;
                let rhs = self.product()?;
                acc = ParseTree::sub(acc, rhs);
                open_add = false;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_primary(&self) -> bool {
        match self.peek() {
            Some(t) => match t.kind {
                TokenKind::Number | TokenKind::Ident | TokenKind::LParen | TokenKind::LBrace => true,
                TokenKind::Command => !t.is_command("cdot") && !t.is_command("times"),
                _ => false,
            },
            None => false,
        }
    }

    fn product(&mut self) -> Result<ParseTree, MathError> {
        let mut acc = self.unary()?;
        let mut open_mul = false;
        loop {
            let rhs = if self.peek_op("*")
                || self
                    .peek()
                    .is_some_and(|t| t.is_command("cdot") || t.is_command("times"))
            {
                self.pos += 1;
                self.unary()?
            } else if self.peek_op("/") {
                self.pos += 1;
                let rhs = self.unary()?;
                acc = ParseTree::div(acc, rhs);
                open_mul = false;
                continue;
            } else if self.starts_primary() {
                self.power()?
            } else {
                return Ok(acc);
            };
            match (&mut acc, open_mul) {
                (ParseTree::Mul(cs), true) => cs.push(rhs),
                _ => {
                    acc = ParseTree::Mul(vec![acc, rhs]);
                    open_mul = true;
                }
            }
        }
    }

    fn unary(&mut self) -> Result<ParseTree, MathError> {
        if self.peek_op("-") {
            self.pos += 1;
            return Ok(ParseTree::neg(self.unary()?));
        }
        if self.peek_op("+") {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<ParseTree, MathError> {
        let base = self.postfix()?;
        if self.peek_op("^") {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(ParseTree::pow(base, exponent));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<ParseTree, MathError> {
        let prim = self.primary()?;
        if self.peek_kind(TokenKind::Underscore) {
            self.pos += 1;
            let sub = self.group()?;
            return Ok(ParseTree::subscript(prim, sub));
        }
        Ok(prim)
    }

    /// `{expr}` or a single primary token.
    fn group(&mut self) -> Result<ParseTree, MathError> {
        if self.peek_kind(TokenKind::LBrace) {
            self.pos += 1;
            let e = self.sum()?;
            self.expect(TokenKind::RBrace, "'}'")?;
            Ok(e)
        } else {
            self.primary()
        }
    }

    fn call_args(&mut self) -> Result<Vec<ParseTree>, MathError> {
        self.expect(TokenKind::LParen, "'('")?;
        let mut args = vec![self.sum()?];
        while self.peek_kind(TokenKind::Comma) {
            self.pos += 1;
            args.push(self.sum()?);
        }
        self.expect(TokenKind::RParen, "')'")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<ParseTree, MathError> {
        let Some(tok) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                Ok(ParseTree::Number(number_value(&tok.lexeme)?))
            }
            TokenKind::Ident => {
                let index = self.pos;
                self.pos += 1;
                if self.choices.get(&index) == Some(&Reading::Apply) {
                    let args = self.call_args()?;
                    Ok(ParseTree::Apply(tok.lexeme.clone(), args))
                } else {
                    Ok(ParseTree::Symbol(tok.lexeme.clone()))
                }
            }
            TokenKind::Command => {
                self.pos += 1;
                match tok.lexeme.as_str() {
                    "frac" => {
                        let num = self.group()?;
                        let den = self.group()?;
                        Ok(ParseTree::div(num, den))
                    }
                    "sqrt" => Ok(ParseTree::apply("sqrt", vec![self.group()?])),
                    name if FUNCTION_COMMANDS.contains(&name) => {
                        let args = if self.peek_kind(TokenKind::LParen) {
                            self.call_args()?
                        } else {
                            vec![self.power()?]
                        };
                        Ok(ParseTree::apply(name, args))
                    }
                    _ => {
                        self.pos -= 1;
                        Err(self.error(format!("unexpected \\{}", tok.lexeme)))
                    }
                }
            }
            TokenKind::LParen => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(e)
            }
            TokenKind::LBrace => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(TokenKind::RBrace, "'}'")?;
                Ok(e)
            }
            _ => Err(self.error(format!("unexpected '{}'", tok.lexeme))),
        }
    }
}
