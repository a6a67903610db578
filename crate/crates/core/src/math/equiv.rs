use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::canon::canonicalize;
use super::diff::{diff_trees, DiffHint, DiffKind};
use super::render::render_latex;
use super::tree::ParseTree;
use super::MathError;

const SAMPLE_MIN: f64 = 0.1;
const SAMPLE_MAX: f64 = 3.0;
const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "hint")]
pub enum EquivalenceVerdict {
    Equivalent,
    Different(DiffHint),
    /// Unknown functions prevent numeric comparison.
    Ambiguous,
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Equivalent)
    }

    pub fn label(&self) -> &'static str {
        match self {
            EquivalenceVerdict::Equivalent => "Equivalent",
            EquivalenceVerdict::Different(_) => "Different",
            EquivalenceVerdict::Ambiguous => "Ambiguous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub seed: u64,
    pub n_samples: usize,
    /// Relative tolerance, floored at absolute `tol` near zero.
    pub tol: f64,
}

impl SamplingConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            n_samples: 32,
            tol: 1e-9,
        }
    }
}

pub fn check_equivalence(
    attempt: &ParseTree,
    expectation: &ParseTree,
    seed: u64,
) -> Result<EquivalenceVerdict, MathError> {
    check_equivalence_with(attempt, expectation, &SamplingConfig::new(seed))
}

/// Canonical equality first, then numeric sampling. Equations compare the
/// differences `lhs - rhs`, allowing one side to be negated (sides swapped).
pub fn check_equivalence_with(
    attempt: &ParseTree,
    expectation: &ParseTree,
    config: &SamplingConfig,
) -> Result<EquivalenceVerdict, MathError> {
    let ca = canonicalize(attempt)?.tree;
    let ce = canonicalize(expectation)?.tree;
    if ca == ce {
        return Ok(EquivalenceVerdict::Equivalent);
    }
    let different = || {
        EquivalenceVerdict::Different(diff_trees(&ce, &ca).unwrap_or(DiffHint {
            kind: DiffKind::StructuralMismatch,
            expected: render_latex(&ce),
            found: render_latex(&ca),
        }))
    };
    let (fa, fe) = match (&ca, &ce) {
        (ParseTree::Equals(al, ar), ParseTree::Equals(el, er)) => (
            ParseTree::sub((**al).clone(), (**ar).clone()),
            ParseTree::sub((**el).clone(), (**er).clone()),
        ),
        (ParseTree::Equals(..), _) | (_, ParseTree::Equals(..)) => return Ok(different()),
        _ => (ca.clone(), ce.clone()),
    };
    let equation = matches!(ca, ParseTree::Equals(..));
    Ok(match numeric_agreement(&fa, &fe, equation, config) {
        None => EquivalenceVerdict::Ambiguous,
        Some(true) => EquivalenceVerdict::Equivalent,
        Some(false) => different(),
    })
}

/// Compares two expressions at seeded random points. `None` when either side
/// applies an unknown function or no point gave finite values on both sides.
/// With `allow_negation`, `a = -b` everywhere also counts as agreement.
pub fn numeric_agreement(a: &ParseTree, b: &ParseTree, allow_negation: bool, config: &SamplingConfig) -> Option<bool> {
    if !a.unknown_functions().is_empty() || !b.unknown_functions().is_empty() {
        return None;
    }
    let symbols: BTreeSet<String> = a.free_symbols().union(&b.free_symbols()).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut same = true;
    let mut negated = allow_negation;
    let mut usable = 0;
    for _ in 0..config.n_samples {
        for _ in 0..=MAX_RETRIES {
            let point: BTreeMap<String, f64> = symbols.iter().map(|s| (s.clone(), draw(&mut rng))).collect();
            let (Some(x), Some(y)) = (evaluate(a, &point), evaluate(b, &point)) else {
                continue;
            };
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            usable += 1;
            same &= close(x, y, config.tol);
            negated &= close(x, -y, config.tol);
            break;
        }
        if !same && !negated {
            return Some(false);
        }
    }
    (usable > 0).then_some(true)
}

fn draw(rng: &mut ChaCha8Rng) -> f64 {
    let magnitude = rng.gen_range(SAMPLE_MIN..=SAMPLE_MAX);
    if rng.gen_bool(0.5) {
        -magnitude
    } else {
        magnitude
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Numeric value at `point`, keyed like [`ParseTree::free_symbols`]. `None`
/// for unbound symbols, unknown functions and equations.
pub fn evaluate(tree: &ParseTree, point: &BTreeMap<String, f64>) -> Option<f64> {
    Some(match tree {
        ParseTree::Number(q) => q.to_f64()?,
        ParseTree::Symbol(s) => *point.get(s)?,
        ParseTree::Subscript(..) => *point.get(&render_latex(tree))?,
        ParseTree::Add(cs) => cs.iter().map(|c| evaluate(c, point)).sum::<Option<f64>>()?,
        ParseTree::Mul(cs) => cs.iter().map(|c| evaluate(c, point)).product::<Option<f64>>()?,
        ParseTree::Sub(a, b) => evaluate(a, point)? - evaluate(b, point)?,
        ParseTree::Div(a, b) => evaluate(a, point)? / evaluate(b, point)?,
        ParseTree::Neg(a) => -evaluate(a, point)?,
        ParseTree::Pow(b, e) => {
            let (b, e) = (evaluate(b, point)?, evaluate(e, point)?);
            if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
                b.powi(e as i32)
            } else {
                b.powf(e)
            }
        }
        ParseTree::Apply(name, args) => {
            let [arg] = args.as_slice() else {
                return None;
            };
            let x = evaluate(arg, point)?;
            match name.as_str() {
                "sin" => x.sin(),
                "cos" => x.cos(),
                "tan" => x.tan(),
                "log" | "ln" => x.ln(),
                "exp" => x.exp(),
                "sqrt" => x.sqrt(),
                _ => return None,
            }
        }
        ParseTree::Equals(..) => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{parse_latex, select_parse, ParseContext};

    fn p(s: &str) -> ParseTree {
        parse_latex(s).unwrap().interpretations[0].tree.clone()
    }

    fn verdict(a: &str, e: &str) -> EquivalenceVerdict {
        check_equivalence(&p(a), &p(e), 7).unwrap()
    }

    #[test]
    fn expansion_by_sampling() {
        assert_eq!(verdict("x^{2} - 1", "(x-1)(x+1)"), EquivalenceVerdict::Equivalent);
        // not equal canonically
        assert_ne!(
            canonicalize(&p("x^2-1")).unwrap(),
            canonicalize(&p("(x-1)(x+1)")).unwrap()
        );
    }

    #[test]
    fn reading_choice_matters() {
        let ctx = ParseContext::new(Vec::<String>::new(), ["x", "y"]);
        let forest = parse_latex("y(x+5)").unwrap();
        let mul = select_parse(&forest, &ctx);
        assert_eq!(
            check_equivalence(mul, &p("(x+5)*y"), 1).unwrap(),
            EquivalenceVerdict::Equivalent
        );
        let apply = &forest.interpretations[0].tree;
        assert_eq!(
            check_equivalence(apply, &p("(x+5)*y"), 1).unwrap(),
            EquivalenceVerdict::Ambiguous
        );
    }

    #[test]
    fn missing_intercept() {
        match verdict("y = m*x", "y = m*x + b") {
            EquivalenceVerdict::Different(h) => {
                assert_eq!(h.kind, DiffKind::MissingTerm);
                assert_eq!(h.expected, "b");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cancellation_caught_numerically() {
        assert_eq!(verdict("x - x", "0"), EquivalenceVerdict::Equivalent);
    }

    #[test]
    fn swapped_equation_sides() {
        assert_eq!(verdict("m x + b = y", "y = m x + b"), EquivalenceVerdict::Equivalent);
        assert_eq!(verdict("y - b = m x", "y = m x + b"), EquivalenceVerdict::Equivalent);
    }

    #[test]
    fn near_miss_is_different() {
        assert!(matches!(
            verdict("x^{2} + 1", "x^{2} + 1.000001"),
            EquivalenceVerdict::Different(_)
        ));
        assert!(matches!(verdict("y = x", "x"), EquivalenceVerdict::Different(_)));
    }

    #[test]
    fn symmetric_and_reflexive() {
        for (a, b) in [
            ("x^{2}", "x x"),
            ("\\sin(x)^{2} + \\cos(x)^{2}", "1"),
            ("a + b", "a - b"),
        ] {
            assert_eq!(verdict(a, b).is_equivalent(), verdict(b, a).is_equivalent());
            assert!(verdict(a, a).is_equivalent());
        }
        assert!(verdict("\\sin(x)^{2} + \\cos(x)^{2}", "1").is_equivalent());
    }

    #[test]
    fn evaluation() {
        let pt = BTreeMap::from([("x".to_string(), 2.0), ("a_{1}".to_string(), 3.0)]);
        assert_eq!(evaluate(&p("\\frac{x^{3}}{4} + a_{1}"), &pt), Some(5.0));
        assert_eq!(evaluate(&p("z"), &pt), None);
    }

    #[test]
    fn unusable_domain_is_ambiguous() {
        assert_eq!(
            verdict("\\sqrt{-x^{2} - 1}", "\\sqrt{-x^{2} - 2}"),
            EquivalenceVerdict::Ambiguous
        );
    }
}
