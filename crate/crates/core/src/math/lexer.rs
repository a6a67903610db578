use serde::{Deserialize, Serialize};

use super::MathError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TokenKind {
    Number,
    Ident,
    Command,
    Operator,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Underscore,
    Comma,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MathToken {
    pub kind: TokenKind,
    /// Operator character, number digits, identifier name, or command name
    /// without the backslash.
    pub lexeme: String,
    pub span: (usize, usize),
}

impl MathToken {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Operator && self.lexeme == op
    }

    pub fn is_command(&self, name: &str) -> bool {
        self.kind == TokenKind::Command && self.lexeme == name
    }
}

/// Commands the parser understands; any other `\name` lexes as an identifier.
pub const COMMANDS: &[&str] = &["frac", "sqrt", "cdot", "times", "sin", "cos", "tan", "log", "ln", "exp"];

/// Commands that are pure layout and produce no token.
const TRANSPARENT: &[&str] = &["left", "right"];

pub fn lex_latex(input: &str) -> Result<Vec<MathToken>, MathError> {
    let bytes: Vec<(usize, char)> = input.char_indices().collect();
    let mut tokens = Vec::new();
    let mut open_braces: Vec<usize> = Vec::new();
    let mut i = 0;
    let push = |tokens: &mut Vec<MathToken>, kind, lexeme: &str, start, end| {
        tokens.push(MathToken {
            kind,
            lexeme: lexeme.to_string(),
            span: (start, end),
        })
    };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        let end_of = |j: usize| bytes.get(j).map_or(input.len(), |&(b, _)| b);
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < bytes.len() && bytes[j].1 == '.' && bytes[j + 1].1.is_ascii_digit() {
                    j += 1;
                    while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                        j += 1;
                    }
                }
                let end = end_of(j);
                push(&mut tokens, TokenKind::Number, &input[pos..end], pos, end);
                i = j;
            }
            c if c.is_alphabetic() => {
                let end = end_of(i + 1);
                push(&mut tokens, TokenKind::Ident, &input[pos..end], pos, end);
                i += 1;
            }
            '\\' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].1.is_ascii_alphabetic() {
                    j += 1;
                }
                if j == i + 1 {
                    // control symbols: thin spaces are ignored, anything else is unsupported
                    match bytes.get(j).map(|&(_, c)| c) {
                        Some(',' | ';' | '!' | ' ' | ':') => {
                            i = j + 1;
                            continue;
                        }
                        other => {
                            return Err(MathError::UnexpectedChar {
                                ch: other.unwrap_or('\\'),
                                position: pos,
                            })
                        }
                    }
                }
                let end = end_of(j);
                let name = &input[pos + 1..end];
                if TRANSPARENT.contains(&name) {
                    i = j;
                    continue;
                }
                let kind = if COMMANDS.contains(&name) {
                    TokenKind::Command
                } else {
                    TokenKind::Ident
                };
                push(&mut tokens, kind, name, pos, end);
                i = j;
            }
            '+' | '-' | '*' | '/' | '^' | '=' => {
                push(&mut tokens, TokenKind::Operator, &c.to_string(), pos, pos + 1);
                i += 1;
            }
            '\u{2212}' => {
                push(&mut tokens, TokenKind::Operator, "-", pos, pos + c.len_utf8());
                i += 1;
            }
            '\u{00b7}' | '\u{00d7}' => {
                push(&mut tokens, TokenKind::Operator, "*", pos, pos + c.len_utf8());
                i += 1;
            }
            '(' => {
                push(&mut tokens, TokenKind::LParen, "(", pos, pos + 1);
                i += 1;
            }
            ')' => {
                push(&mut tokens, TokenKind::RParen, ")", pos, pos + 1);
                i += 1;
            }
            '{' => {
                open_braces.push(pos);
                push(&mut tokens, TokenKind::LBrace, "{", pos, pos + 1);
                i += 1;
            }
            '}' => {
                if open_braces.pop().is_none() {
                    return Err(MathError::UnbalancedBrace { position: pos });
                }
                push(&mut tokens, TokenKind::RBrace, "}", pos, pos + 1);
                i += 1;
            }
            '_' => {
                push(&mut tokens, TokenKind::Underscore, "_", pos, pos + 1);
                i += 1;
            }
            ',' => {
                push(&mut tokens, TokenKind::Comma, ",", pos, pos + 1);
                i += 1;
            }
            other => {
                return Err(MathError::UnexpectedChar {
                    ch: other,
                    position: pos,
                })
            }
        }
    }
    if let Some(&position) = open_braces.first() {
        return Err(MathError::UnbalancedBrace { position });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(s: &str) -> Vec<(TokenKind, String)> {
        lex_latex(s).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    fn k(kind: TokenKind, s: &str) -> (TokenKind, String) {
        (kind, s.to_string())
    }

    #[test]
    fn function_or_product() {
        assert_eq!(
            kinds("y(x+5)"),
            vec![
                k(Ident, "y"),
                k(LParen, "("),
                k(Ident, "x"),
                k(Operator, "+"),
                k(Number, "5"),
                k(RParen, ")")
            ]
        );
    }

    #[test]
    fn frac() {
        assert_eq!(
            kinds("\\frac{1}{2}"),
            vec![
                k(Command, "frac"),
                k(LBrace, "{"),
                k(Number, "1"),
                k(RBrace, "}"),
                k(LBrace, "{"),
                k(Number, "2"),
                k(RBrace, "}")
            ]
        );
    }

    #[test]
    fn unbalanced() {
        assert_eq!(lex_latex("{x"), Err(MathError::UnbalancedBrace { position: 0 }));
        assert_eq!(lex_latex("x}"), Err(MathError::UnbalancedBrace { position: 1 }));
    }

    #[test]
    fn unknown_command_is_identifier() {
        assert_eq!(kinds("\\alpha"), vec![k(Ident, "alpha")]);
        assert_eq!(
            kinds("\\left( x \\right)"),
            vec![k(LParen, "("), k(Ident, "x"), k(RParen, ")")]
        );
    }

    #[test]
    fn numbers_and_letters() {
        assert_eq!(kinds("3.25xy"), vec![k(Number, "3.25"), k(Ident, "x"), k(Ident, "y")]);
        assert!(matches!(
            lex_latex("x!"),
            Err(MathError::UnexpectedChar { ch: '!', position: 1 })
        ));
    }

    #[test]
    fn spans_cover_non_whitespace() {
        let src = "a_{1} + \\sin(x) \\cdot 2";
        let toks = lex_latex(src).unwrap();
        let covered: usize = toks.iter().map(|t| t.span.1 - t.span.0).sum();
        assert_eq!(covered, src.chars().filter(|c| !c.is_whitespace()).count());
        let mut last = 0;
        for t in &toks {
            assert!(t.span.0 >= last);
            last = t.span.1;
        }
    }
}
