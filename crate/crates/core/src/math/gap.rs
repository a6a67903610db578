use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::render::{render_latex, render_with_slots, SLOT};
use super::tree::ParseTree;
use super::MathError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlankingPolicy {
    /// One leaf, chosen uniformly by the seed.
    BlankOneLeaf,
    /// Every numeric factor of a product.
    BlankCoefficients,
}

/// An expectation with blanks for the student to fill in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapHint {
    pub rendered: String,
    /// Renderings of the hidden subtrees, in slot order.
    pub answers: Vec<String>,
    /// Tree paths of the blanked leaves, in slot order.
    pub slots: Vec<Vec<usize>>,
    pub policy: BlankingPolicy,
    pub seed: u64,
}

impl GapHint {
    /// Substitutes `answers` into the slots, left to right.
    pub fn fill(&self, answers: &[String]) -> Result<String, MathError> {
        let pieces: Vec<&str> = self.rendered.split(SLOT).collect();
        if pieces.len() != answers.len() + 1 {
            return Err(MathError::AnswerCount {
                expected: pieces.len() - 1,
                found: answers.len(),
            });
        }
        let mut out = pieces[0].to_string();
        for (answer, rest) in answers.iter().zip(&pieces[1..]) {
            out.push_str(answer);
            out.push_str(rest);
        }
        Ok(out)
    }

    pub fn solution(&self) -> String {
        self.fill(&self.answers).unwrap_or_else(|_| self.rendered.clone())
    }
}

/// Paths of Number, Symbol and Subscript leaves in pre-order, skipping the
/// left side of an equation. A bare leaf expression has none.
pub fn blankable_leaves(tree: &ParseTree) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if tree.is_atom() {
        return out;
    }
    let mut path = Vec::new();
    collect(tree, &mut path, &mut out);
    out
}

fn collect(tree: &ParseTree, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if tree.is_atom() {
        out.push(path.clone());
        return;
    }
    let skip_first = matches!(tree, ParseTree::Equals(..));
    for (i, c) in tree.children().into_iter().enumerate() {
        if skip_first && i == 0 {
            continue;
        }
        path.push(i);
        collect(c, path, out);
        path.pop();
    }
}

fn coefficient_leaves(tree: &ParseTree) -> Vec<Vec<usize>> {
    blankable_leaves(tree)
        .into_iter()
        .filter(|p| {
            let parent = &p[..p.len() - 1];
            matches!(tree.at_path(parent), Some(ParseTree::Mul(_)))
                && matches!(tree.at_path(p), Some(ParseTree::Number(_)))
        })
        .collect()
}

/// Blanks leaves of `expectation` per `policy`. With [`BlankingPolicy::BlankOneLeaf`]
/// the leaf is `blankable_leaves(expectation)[i]` where `i` is the first
/// `gen_range(0..n)` draw of `ChaCha8Rng::seed_from_u64(seed)`.
pub fn make_gap_hint(expectation: &ParseTree, policy: BlankingPolicy, seed: u64) -> Result<GapHint, MathError> {
    let slots = match policy {
        BlankingPolicy::BlankOneLeaf => {
            let leaves = blankable_leaves(expectation);
            if leaves.is_empty() {
                return Err(MathError::NoBlankableLeaf);
            }
            let i = ChaCha8Rng::seed_from_u64(seed).gen_range(0..leaves.len());
            vec![leaves[i].clone()]
        }
        BlankingPolicy::BlankCoefficients => coefficient_leaves(expectation),
    };
    if slots.is_empty() {
        return Err(MathError::NoBlankableLeaf);
    }
    let answers = slots
        .iter()
        .map(|p| render_latex(expectation.at_path(p).expect("slot path exists")))
        .collect();
    let set: BTreeSet<Vec<usize>> = slots.iter().cloned().collect();
    Ok(GapHint {
        rendered: render_with_slots(expectation, &set),
        answers,
        slots,
        policy,
        seed,
    })
}
