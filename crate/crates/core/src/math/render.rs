use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::tree::ParseTree;

pub const SLOT: &str = "\\boxed{?}";

const COMMAND_FUNCTIONS: &[&str] = &["sin", "cos", "tan", "log", "ln", "exp"];

/// Renders with canonical spacing and minimal precedence-correct parentheses.
/// Division is always written as `\frac`, multiplication as `\cdot`.
pub fn render_latex(tree: &ParseTree) -> String {
    Renderer { slots: None }.render(tree)
}

/// Renders with the leaves at `slots` replaced by `\boxed{?}`.
pub fn render_with_slots(tree: &ParseTree, slots: &BTreeSet<Vec<usize>>) -> String {
    Renderer { slots: Some(slots) }.render(tree)
}

struct Renderer<'a> {
    slots: Option<&'a BTreeSet<Vec<usize>>>,
}

fn render_number(q: &BigRational) -> String {
    if q.denom() == &BigInt::from(1) || q.numer().is_zero() {
        return q.numer().to_string();
    }
    // terminating decimals render as decimals, everything else as a fraction
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d == BigInt::from(1) {
        let places = twos.max(fives);
        let scaled = q * BigRational::from_integer(num_traits::pow(BigInt::from(10), places as usize));
        let digits = scaled.numer().abs().to_string();
        let width = places as usize + 1;
        let padded = format!("{digits:0>width$}");
        let (int, frac) = padded.split_at(padded.len() - places as usize);
        let sign = if q.is_negative() { "-" } else { "" };
        return format!("{sign}{int}.{frac}");
    }
    let sign = if q.is_negative() { "-" } else { "" };
    format!("{sign}\\frac{{{}}}{{{}}}", q.numer().abs(), q.denom())
}

impl Renderer<'_> {
    fn render(&self, tree: &ParseTree) -> String {
        let mut path = Vec::new();
        self.node(tree, &mut path)
    }

    fn child(&self, tree: &ParseTree, path: &mut Vec<usize>, i: usize, parens: bool) -> String {
        path.push(i);
        let s = self.node(tree, path);
        path.pop();
        if parens {
            format!("({s})")
        } else {
            s
        }
    }

    fn node(&self, tree: &ParseTree, path: &mut Vec<usize>) -> String {
        if self.slots.is_some_and(|s| s.contains(path.as_slice())) {
            return SLOT.to_string();
        }
        match tree {
            ParseTree::Number(q) => render_number(q),
            ParseTree::Symbol(s) => symbol_name(s),
            ParseTree::Subscript(b, s) => {
                let base = self.child(b, path, 0, !b.is_atom());
                format!("{base}_{{{}}}", self.child(s, path, 1, false))
            }
            ParseTree::Add(cs) => cs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let parens = match c {
                        ParseTree::Add(_) | ParseTree::Equals(..) => true,
                        ParseTree::Sub(..) | ParseTree::Neg(_) => i > 0,
                        c if c.is_negative_number() => i > 0,
                        _ => false,
                    };
                    self.child(c, path, i, parens)
                })
                .collect::<Vec<_>>()
                .join(" + "),
            ParseTree::Sub(a, b) => {
                let l = self.child(a, path, 0, matches!(**a, ParseTree::Equals(..)));
                let rp = matches!(
                    **b,
                    ParseTree::Add(_) | ParseTree::Sub(..) | ParseTree::Neg(_) | ParseTree::Equals(..)
                ) || b.is_negative_number();
                format!("{l} - {}", self.child(b, path, 1, rp))
            }
            ParseTree::Mul(cs) => cs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let parens = match c {
                        ParseTree::Add(_) | ParseTree::Sub(..) | ParseTree::Mul(_) | ParseTree::Equals(..) => true,
                        ParseTree::Neg(_) => i > 0,
                        c if c.is_negative_number() => i > 0,
                        _ => false,
                    };
                    self.child(c, path, i, parens)
                })
                .collect::<Vec<_>>()
                .join(" \\cdot "),
            ParseTree::Div(a, b) => format!(
                "\\frac{{{}}}{{{}}}",
                self.child(a, path, 0, false),
                self.child(b, path, 1, false)
            ),
            ParseTree::Pow(b, e) => {
                let base_ok = match &**b {
                    ParseTree::Number(q) => !q.is_negative() && q.denom() == &BigInt::from(1),
                    ParseTree::Symbol(_) | ParseTree::Subscript(..) | ParseTree::Apply(..) | ParseTree::Div(..) => true,
                    _ => false,
                };
                let base = self.child(b, path, 0, !base_ok);
                format!("{base}^{{{}}}", self.child(e, path, 1, false))
            }
            ParseTree::Neg(a) => {
                let parens = matches!(
                    **a,
                    ParseTree::Add(_)
                        | ParseTree::Sub(..)
                        | ParseTree::Mul(_)
                        | ParseTree::Neg(_)
                        | ParseTree::Equals(..)
                ) || a.is_negative_number();
                format!("-{}", self.child(a, path, 0, parens))
            }
            ParseTree::Apply(name, args) => {
                let rendered: Vec<String> = args
                    .iter()
                    .enumerate()
                    .map(|(i, a)| self.child(a, path, i, false))
                    .collect();
                if name == "sqrt" && rendered.len() == 1 {
                    format!("\\sqrt{{{}}}", rendered[0])
                } else if COMMAND_FUNCTIONS.contains(&name.as_str()) {
                    format!("\\{name}({})", rendered.join(", "))
                } else {
                    format!("{}({})", symbol_name(name), rendered.join(", "))
                }
            }
            ParseTree::Equals(a, b) => format!("{} = {}", self.child(a, path, 0, false), self.child(b, path, 1, false)),
        }
    }
}

fn symbol_name(s: &str) -> String {
    if s.chars().count() == 1 {
        s.to_string()
    } else {
        format!("\\{s}")
    }
}
