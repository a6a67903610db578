use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cv::{Predictor, Trainer};
use super::{validate_examples, ModelError, TrainingExample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` means all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_samples_leaf: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        /// Negative and positive counts.
        counts: [u32; 2],
        label: u8,
        probability: f64,
    },
}

impl Node {
    fn leaf(counts: [u32; 2]) -> Self {
        let total = counts[0] + counts[1];
        Node::Leaf {
            counts,
            label: (counts[1] > counts[0]) as u8,
            probability: if total == 0 {
                0.0
            } else {
                counts[1] as f64 / total as f64
            },
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&Node> {
        match self {
            Node::Leaf { .. } => vec![self],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }

    /// Leaf reached by `x`.
    pub fn walk(&self, x: &[f64]) -> &Node {
        let mut n = self;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = n
        {
            n = if x[*feature] <= *threshold { left } else { right };
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub n_features: usize,
    pub params: TreeParams,
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self.root.walk(x) {
            Node::Leaf { probability, .. } => *probability,
            Node::Split { .. } => unreachable!("walk ends at a leaf"),
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        match self.root.walk(x) {
            Node::Leaf { label, .. } => *label,
            Node::Split { .. } => unreachable!("walk ends at a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

impl Predictor for DecisionTree {
    fn predict_proba(&self, features: &[f64]) -> f64 {
        DecisionTree::predict_proba(self, features)
    }
}

pub fn gini(counts: [u32; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

fn counts_of(examples: &[TrainingExample], idx: &[usize]) -> [u32; 2] {
    let mut c = [0u32; 2];
    for &i in idx {
        c[examples[i].label as usize] += 1;
    }
    c
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Lowest weighted Gini over the given features; ties keep the lower
/// feature index, then the lower threshold.
fn best_split(examples: &[TrainingExample], idx: &[usize], features: &[usize], min_leaf: usize) -> Option<Split> {
    let n = idx.len();
    let total = counts_of(examples, idx);
    let mut best: Option<Split> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| {
            examples[a].features[f]
                .total_cmp(&examples[b].features[f])
                .then(a.cmp(&b))
        });
        let mut left = [0u32; 2];
        for k in 0..n - 1 {
            left[examples[order[k]].label as usize] += 1;
            let (v, next) = (examples[order[k]].features[f], examples[order[k + 1]].features[f]);
            if v == next {
                continue;
            }
            let (nl, nr) = (k + 1, n - k - 1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let impurity = (nl as f64 * gini(left) + nr as f64 * gini(right)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(Split {
                    feature: f,
                    threshold: v + (next - v) / 2.0,
                    impurity,
                });
            }
        }
    }
    best
}

struct Builder<'a> {
    examples: &'a [TrainingExample],
    params: TreeParams,
    n_features: usize,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn features(&mut self) -> Vec<usize> {
        match self.params.max_features {
            Some(m) if m < self.n_features => {
                let mut v = sample(&mut self.rng, self.n_features, m).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..self.n_features).collect(),
        }
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> Node {
        let counts = counts_of(self.examples, idx);
        if depth >= self.params.max_depth || counts[0] == 0 || counts[1] == 0 {
            return Node::leaf(counts);
        }
        let features = self.features();
        let Some(split) = best_split(self.examples, idx, &features, self.params.min_samples_leaf) else {
            return Node::leaf(counts);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.examples[i].features[split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(&l, depth + 1)),
            right: Box::new(self.build(&r, depth + 1)),
        }
    }
}

/// Greedy Gini tree. A split is taken whenever one is admissible, even if it
/// does not lower impurity, so that parity patterns can be learned.
pub fn train_decision_tree(
    examples: &[TrainingExample],
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree, ModelError> {
    let n_features = validate_examples(examples)?;
    if params.min_samples_leaf == 0 {
        return Err(ModelError::InvalidParameter(
            "min_samples_leaf must be at least 1".into(),
        ));
    }
    if params.max_features == Some(0) {
        return Err(ModelError::InvalidParameter("max_features must be at least 1".into()));
    }
    let mut b = Builder {
        examples,
        params: *params,
        n_features,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let idx: Vec<usize> = (0..examples.len()).collect();
    let root = b.build(&idx, 0);
    Ok(DecisionTree {
        root,
        n_features,
        params: *params,
    })
}

#[derive(Debug, Clone, Default)]
pub struct TreeTrainer {
    pub params: TreeParams,
}

impl Trainer for TreeTrainer {
    type Model = DecisionTree;

    fn train(&self, examples: &[TrainingExample], seed: u64) -> Result<DecisionTree, ModelError> {
        train_decision_tree(examples, &self.params, seed)
    }
}
