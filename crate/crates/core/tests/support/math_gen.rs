//! Random equation trees shared by the property suites.
//!
//! Leaves are single-letter symbols from `a..=e` and `x..=z`, the Greek
//! names `alpha`/`theta`, subscripted symbols `a_{1}`, non-negative integers
//! 0..=9 and the decimals 0.5/2.25. Inner nodes are Add and Mul with 2..=3
//! children, Sub, Div, Pow with a small exponent, Neg, and Apply of `\sin`,
//! `\sqrt` or `f`. The root may be an equation. Negative and non-terminating
//! numbers are never generated since the parser reads `-2` as `Neg(2)` and
//! `\frac{1}{3}` as a division.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use tutorloop::math::*;

pub fn leaf() -> impl Strategy<Value = ParseTree> {
    prop_oneof![
        prop::sample::select(vec!["a", "b", "c", "d", "e", "x", "y", "z", "alpha", "theta"]).prop_map(ParseTree::sym),
        (0i64..=9).prop_map(ParseTree::int),
        Just(ParseTree::Number(BigRational::new(BigInt::from(1), BigInt::from(2)))),
        Just(ParseTree::Number(BigRational::new(BigInt::from(9), BigInt::from(4)))),
        Just(ParseTree::subscript(ParseTree::sym("a"), ParseTree::int(1))),
    ]
}

pub fn expr() -> impl Strategy<Value = ParseTree> {
    leaf().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(ParseTree::Add),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(ParseTree::Mul),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ParseTree::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ParseTree::div(a, b)),
            (inner.clone(), 2i64..=3).prop_map(|(a, k)| ParseTree::pow(a, ParseTree::int(k))),
            inner.clone().prop_map(ParseTree::neg),
            (prop::sample::select(vec!["sin", "sqrt", "f"]), inner).prop_map(|(f, a)| ParseTree::apply(f, vec![a])),
        ]
    })
}

pub fn tree() -> impl Strategy<Value = ParseTree> {
    prop_oneof![
        3 => expr(),
        1 => (expr(), expr()).prop_map(|(a, b)| ParseTree::equals(a, b)),
    ]
}

pub fn sites(t: &ParseTree) -> usize {
    let mut n = 0;
    t.walk(&mut |n2| {
        if matches!(n2, ParseTree::Apply(name, _) if name == "f") {
            n += 1;
        }
    });
    n
}

/// Shuffles Add/Mul children and regroups the first two children of each
/// sum or product, recursively. Numeric value is unchanged.
pub fn rewrite(t: &ParseTree, rng: &mut ChaCha8Rng) -> ParseTree {
    let regroup = |cs: &mut Vec<ParseTree>, rng: &mut ChaCha8Rng, mk: fn(Vec<ParseTree>) -> ParseTree| {
        cs.shuffle(rng);
        if cs.len() > 2 && rand::Rng::gen_bool(rng, 0.5) {
            let rest = cs.split_off(2);
            let first = mk(std::mem::take(cs));
            cs.push(first);
            cs.extend(rest);
        }
    };
    match t {
        ParseTree::Add(cs) => {
            let mut cs: Vec<_> = cs.iter().map(|c| rewrite(c, rng)).collect();
            regroup(&mut cs, rng, ParseTree::Add);
            ParseTree::Add(cs)
        }
        ParseTree::Mul(cs) => {
            let mut cs: Vec<_> = cs.iter().map(|c| rewrite(c, rng)).collect();
            regroup(&mut cs, rng, ParseTree::Mul);
            ParseTree::Mul(cs)
        }
        ParseTree::Sub(a, b) => ParseTree::sub(rewrite(a, rng), rewrite(b, rng)),
        ParseTree::Div(a, b) => ParseTree::div(rewrite(a, rng), rewrite(b, rng)),
        ParseTree::Pow(a, b) => ParseTree::pow(rewrite(a, rng), (**b).clone()),
        ParseTree::Neg(a) => ParseTree::neg(rewrite(a, rng)),
        ParseTree::Apply(f, args) => ParseTree::apply(f, args.iter().map(|a| rewrite(a, rng)).collect()),
        ParseTree::Equals(a, b) => ParseTree::equals(rewrite(a, rng), rewrite(b, rng)),
        leaf => leaf.clone(),
    }
}

pub fn without_unknown(t: &ParseTree) -> bool {
    t.unknown_functions().is_empty()
}
