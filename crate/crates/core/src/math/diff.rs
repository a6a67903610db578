use std::fmt;

use serde::{Deserialize, Serialize};

use super::canon::split_coefficient;
use super::render::render_latex;
use super::tree::ParseTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiffKind {
    MissingTerm,
    ExtraTerm,
    WrongCoefficient,
    WrongExponent,
    WrongOperator,
    StructuralMismatch,
}

/// What the student needs to change. Fragments are rendered LaTeX; an empty
/// fragment means "nothing" (e.g. the found side of a missing term).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffHint {
    pub kind: DiffKind,
    pub expected: String,
    pub found: String,
}

impl DiffHint {
    fn new(kind: DiffKind, expected: Option<&ParseTree>, found: Option<&ParseTree>) -> Self {
        Self {
            kind,
            expected: expected.map(render_latex).unwrap_or_default(),
            found: found.map(render_latex).unwrap_or_default(),
        }
    }

    pub fn message(&self) -> String {
        match self.kind {
            DiffKind::MissingTerm => format!("Your answer is missing the term {}.", self.expected),
            DiffKind::ExtraTerm => format!("The term {} should not be there.", self.found),
            DiffKind::WrongCoefficient => {
                format!(
                    "Check the coefficient: you wrote {} where {} belongs.",
                    self.found, self.expected
                )
            }
            DiffKind::WrongExponent => {
                format!(
                    "Check the exponent: you wrote {} where {} belongs.",
                    self.found, self.expected
                )
            }
            DiffKind::WrongOperator => {
                format!(
                    "Check the operation: you wrote {} where {} belongs.",
                    self.found, self.expected
                )
            }
            DiffKind::StructuralMismatch => {
                format!(
                    "Your expression {} has a different shape from {}.",
                    self.found, self.expected
                )
            }
        }
    }
}

impl fmt::Display for DiffHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message())
    }
}

/// First difference between two canonical trees, top-down in canonical child
/// order. `None` when the trees are equal.
///
/// Order of checks at a node: equation sides (left then right); sums as term
/// multisets (exact matches cancel, then each leftover expected term in order
/// is paired with a found term of the same monomial, then the same base, else
/// reported missing; leftover found terms are extra); products by coefficient
/// then factors; powers by base then exponent; function names then arguments.
pub fn diff_trees(expected: &ParseTree, found: &ParseTree) -> Option<DiffHint> {
    if expected == found {
        return None;
    }
    use ParseTree as T;
    Some(match (expected, found) {
        (T::Equals(el, er), T::Equals(fl, fr)) => {
            return diff_trees(el, fl).or_else(|| diff_trees(er, fr));
        }
        (T::Equals(..), _) | (_, T::Equals(..)) => {
            DiffHint::new(DiffKind::StructuralMismatch, Some(expected), Some(found))
        }
        (T::Add(a), T::Mul(b)) | (T::Mul(a), T::Add(b)) if same_multiset(a, b) => {
            DiffHint::new(DiffKind::WrongOperator, Some(expected), Some(found))
        }
        (T::Add(_), _) | (_, T::Add(_)) => diff_terms(&terms(expected), &terms(found)),
        (T::Number(_), T::Number(_)) => DiffHint::new(DiffKind::WrongCoefficient, Some(expected), Some(found)),
        (T::Mul(_), _) | (_, T::Mul(_)) => diff_product(expected, found),
        (T::Pow(eb, ee), T::Pow(fb, fe)) => {
            if eb == fb {
                DiffHint::new(DiffKind::WrongExponent, Some(ee), Some(fe))
            } else if ee == fe {
                return diff_trees(eb, fb);
            } else {
                DiffHint::new(DiffKind::StructuralMismatch, Some(expected), Some(found))
            }
        }
        (T::Pow(eb, _), other) | (other, T::Pow(eb, _)) if **eb == *other => {
            DiffHint::new(DiffKind::WrongExponent, Some(expected), Some(found))
        }
        (T::Apply(en, ea), T::Apply(fname, fa)) => {
            if en != fname {
                DiffHint::new(DiffKind::WrongOperator, Some(expected), Some(found))
            } else if ea.len() == fa.len() {
                return ea.iter().zip(fa).find_map(|(e, f)| diff_trees(e, f));
            } else {
                DiffHint::new(DiffKind::StructuralMismatch, Some(expected), Some(found))
            }
        }
        _ => DiffHint::new(DiffKind::StructuralMismatch, Some(expected), Some(found)),
    })
}

fn terms(t: &ParseTree) -> Vec<ParseTree> {
    match t {
        ParseTree::Add(cs) => cs.clone(),
        other => vec![other.clone()],
    }
}

fn factors(t: &ParseTree) -> Vec<ParseTree> {
    match t {
        ParseTree::Mul(cs) => cs.clone(),
        other => vec![other.clone()],
    }
}

fn same_multiset(a: &[ParseTree], b: &[ParseTree]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

fn base_of(t: &ParseTree) -> &ParseTree {
    match t {
        ParseTree::Pow(b, _) => b,
        other => other,
    }
}

/// Removes exact matches, keeping canonical order of the leftovers.
fn cancel(expected: &[ParseTree], found: &[ParseTree]) -> (Vec<ParseTree>, Vec<ParseTree>) {
    let mut left_found: Vec<Option<ParseTree>> = found.iter().cloned().map(Some).collect();
    let mut left_expected = Vec::new();
    for e in expected {
        match left_found.iter_mut().find(|f| f.as_ref() == Some(e)) {
            Some(slot) => *slot = None,
            None => left_expected.push(e.clone()),
        }
    }
    (left_expected, left_found.into_iter().flatten().collect())
}

fn diff_terms(expected: &[ParseTree], found: &[ParseTree]) -> DiffHint {
    let (le, lf) = cancel(expected, found);
    if let Some(e) = le.first() {
        let (_, em) = split_coefficient(e);
        if let Some(f) = lf.iter().find(|f| split_coefficient(f).1 == em) {
            return DiffHint::new(DiffKind::WrongCoefficient, Some(e), Some(f));
        }
        let eb = base_of(&em);
        if let Some(f) = lf.iter().find(|f| base_of(&split_coefficient(f).1) == eb) {
            return diff_trees(e, f).unwrap_or_else(|| DiffHint::new(DiffKind::StructuralMismatch, Some(e), Some(f)));
        }
        if le.len() == 1 && lf.len() == 1 {
            return diff_trees(e, &lf[0])
                .unwrap_or_else(|| DiffHint::new(DiffKind::StructuralMismatch, Some(e), Some(&lf[0])));
        }
        return DiffHint::new(DiffKind::MissingTerm, Some(e), None);
    }
    DiffHint::new(DiffKind::ExtraTerm, None, lf.first())
}

fn diff_product(expected: &ParseTree, found: &ParseTree) -> DiffHint {
    let (ec, em) = split_coefficient(expected);
    let (fc, fm) = split_coefficient(found);
    if em == fm && ec != fc {
        return DiffHint::new(DiffKind::WrongCoefficient, Some(expected), Some(found));
    }
    let (le, lf) = cancel(&factors(&em), &factors(&fm));
    if ec == fc && le.len() == 1 && lf.len() == 1 {
        let (e, f) = (&le[0], &lf[0]);
        if base_of(e) == base_of(f) {
            return DiffHint::new(DiffKind::WrongExponent, Some(e), Some(f));
        }
        if let Some(h) = diff_trees(e, f) {
            return h;
        }
    }
    DiffHint::new(DiffKind::StructuralMismatch, Some(expected), Some(found))
}
