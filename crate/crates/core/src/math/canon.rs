use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::tree::ParseTree;
use super::MathError;

/// Largest integer exponent folded exactly.
const MAX_FOLD_EXPONENT: u32 = 1024;

/// A tree in normal form: n-ary Add/Mul flattened and sorted, no Sub, Neg or
/// Div nodes, rational constants folded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalForm {
    pub tree: ParseTree,
}

impl CanonicalForm {
    pub fn into_tree(self) -> ParseTree {
        self.tree
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.tree.fmt(f)
    }
}

pub fn canonicalize(tree: &ParseTree) -> Result<CanonicalForm, MathError> {
    Ok(CanonicalForm { tree: canon(tree)? })
}

fn number(q: BigRational) -> ParseTree {
    ParseTree::Number(q)
}

fn minus_one() -> ParseTree {
    number(-BigRational::one())
}

fn canon(t: &ParseTree) -> Result<ParseTree, MathError> {
    Ok(match t {
        ParseTree::Number(_) | ParseTree::Symbol(_) | ParseTree::Subscript(..) => t.clone(),
        ParseTree::Add(cs) => make_add(cs.iter().map(canon).collect::<Result<_, _>>()?),
        ParseTree::Mul(cs) => make_mul(cs.iter().map(canon).collect::<Result<_, _>>()?),
        ParseTree::Sub(a, b) => {
            let neg = make_mul(vec![minus_one(), canon(b)?]);
            make_add(vec![canon(a)?, neg])
        }
        ParseTree::Neg(a) => make_mul(vec![minus_one(), canon(a)?]),
        ParseTree::Div(a, b) => {
            let inv = make_pow(canon(b)?, minus_one())?;
            make_mul(vec![canon(a)?, inv])
        }
        ParseTree::Pow(b, e) => make_pow(canon(b)?, canon(e)?)?,
        ParseTree::Apply(name, args) => {
            ParseTree::Apply(name.clone(), args.iter().map(canon).collect::<Result<_, _>>()?)
        }
        ParseTree::Equals(a, b) => ParseTree::equals(canon(a)?, canon(b)?),
    })
}

fn make_add(children: Vec<ParseTree>) -> ParseTree {
    let mut constant = BigRational::zero();
    let mut terms = Vec::new();
    for c in children {
        match c {
            ParseTree::Add(inner) => {
                for t in inner {
                    match t {
                        ParseTree::Number(q) => constant += q,
                        t => terms.push(t),
                    }
                }
            }
            ParseTree::Number(q) => constant += q,
            t => terms.push(t),
        }
    }
    if !constant.is_zero() || terms.is_empty() {
        terms.push(number(constant));
    }
    terms.sort();
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        ParseTree::Add(terms)
    }
}

fn make_mul(children: Vec<ParseTree>) -> ParseTree {
    let mut constant = BigRational::one();
    let mut factors = Vec::new();
    for c in children {
        match c {
            ParseTree::Mul(inner) => {
                for t in inner {
                    match t {
                        ParseTree::Number(q) => constant *= q,
                        t => factors.push(t),
                    }
                }
            }
            ParseTree::Number(q) => constant *= q,
            t => factors.push(t),
        }
    }
    if constant.is_zero() {
        return number(constant);
    }
    if !constant.is_one() || factors.is_empty() {
        factors.push(number(constant));
    }
    factors.sort();
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        ParseTree::Mul(factors)
    }
}

fn make_pow(base: ParseTree, exponent: ParseTree) -> Result<ParseTree, MathError> {
    if let ParseTree::Number(e) = &exponent {
        if e.is_zero() {
            if matches!(&base, ParseTree::Number(b) if b.is_zero()) {
                return Err(MathError::DivisionByZero);
            }
            return Ok(number(BigRational::one()));
        }
        if e.is_one() {
            return Ok(base);
        }
        if let ParseTree::Number(b) = &base {
            if b.is_zero() && e.is_negative() {
                return Err(MathError::DivisionByZero);
            }
            if e.is_integer() {
                if let Some(k) = e.numer().abs().to_u32().filter(|&k| k <= MAX_FOLD_EXPONENT) {
                    let p = num_traits::pow(b.clone(), k as usize);
                    return Ok(number(if e.is_negative() { p.recip() } else { p }));
                }
            }
        }
    }
    Ok(ParseTree::pow(base, exponent))
}

pub(crate) fn split_coefficient(term: &ParseTree) -> (BigRational, ParseTree) {
    match term {
        ParseTree::Number(q) => (q.clone(), number(BigRational::one())),
        ParseTree::Mul(cs) => match cs.first() {
            Some(ParseTree::Number(q)) => {
                let rest: Vec<ParseTree> = cs[1..].to_vec();
                let rest = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    ParseTree::Mul(rest)
                };
                (q.clone(), rest)
            }
            _ => (BigRational::one(), term.clone()),
        },
        _ => (BigRational::one(), term.clone()),
    }
}
