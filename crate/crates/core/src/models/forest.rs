use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{Predictor, Trainer};
use super::tree::{train_decision_tree, DecisionTree, TreeParams};
use super::{validate_examples, ModelError, TrainingExample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` resolves to the ceiling of the square root of the feature count.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_samples_leaf: 2,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    /// Seed of tree `i` is `master_seed + i`.
    pub seeds: Vec<u64>,
    pub features_per_split: usize,
    pub master_seed: u64,
    pub n_features: usize,
    pub oob_accuracy: Option<f64>,
}

impl RandomForest {
    /// Mean of the member trees' leaf probabilities.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}

impl Predictor for RandomForest {
    fn predict_proba(&self, features: &[f64]) -> f64 {
        RandomForest::predict_proba(self, features)
    }
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

pub fn train_random_forest(
    examples: &[TrainingExample],
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest, ModelError> {
    let d = validate_examples(examples)?;
    if params.n_trees == 0 {
        return Err(ModelError::InvalidParameter("n_trees must be at least 1".into()));
    }
    let m = params
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(m),
    };
    let n = examples.len();
    let seeds: Vec<u64> = (0..params.n_trees as u64).map(|i| seed.wrapping_add(i)).collect();
    let trained: Vec<(DecisionTree, Vec<usize>)> = seeds
        .par_iter()
        .map(|&s| {
            let idx = bootstrap_indices(n, s);
            let sample: Vec<TrainingExample> = idx.iter().map(|&i| examples[i].clone()).collect();
            train_decision_tree(&sample, &tree_params, s).map(|t| (t, idx))
        })
        .collect::<Result<_, _>>()?;

    // out-of-bag votes: mean probability over trees that did not see the example
    let mut in_bag = vec![vec![false; n]; trained.len()];
    for (t, (_, idx)) in trained.iter().enumerate() {
        for &i in idx {
            in_bag[t][i] = true;
        }
    }
    let (mut hits, mut seen) = (0usize, 0usize);
    for (i, e) in examples.iter().enumerate() {
        let probs: Vec<f64> = trained
            .iter()
            .enumerate()
            .filter(|(t, _)| !in_bag[*t][i])
            .map(|(_, (tree, _))| tree.predict_proba(&e.features))
            .collect();
        if probs.is_empty() {
            continue;
        }
        seen += 1;
        let p = probs.iter().sum::<f64>() / probs.len() as f64;
        hits += ((p > 0.5) as u8 == e.label) as usize;
    }
    Ok(RandomForest {
        trees: trained.into_iter().map(|(t, _)| t).collect(),
        seeds,
        features_per_split: m,
        master_seed: seed,
        n_features: d,
        oob_accuracy: (seen > 0).then(|| hits as f64 / seen as f64),
    })
}

#[derive(Debug, Clone, Default)]
pub struct ForestTrainer {
    pub params: ForestParams,
}

impl Trainer for ForestTrainer {
    type Model = RandomForest;

    fn train(&self, examples: &[TrainingExample], seed: u64) -> Result<RandomForest, ModelError> {
        train_random_forest(examples, &self.params, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Node;
    use rand_distr::Distribution;

    fn blobs(n: usize, seed: u64) -> Vec<TrainingExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|i| {
                let y = i % 2 == 1;
                let c = if y { 3.0 } else { -3.0 };
                TrainingExample::new(vec![c + normal.sample(&mut rng), c + normal.sample(&mut rng)], y)
            })
            .collect()
    }

    #[test]
    fn single_tree_forest_is_tree_on_bootstrap() {
        let data = blobs(60, 3);
        let params = ForestParams {
            n_trees: 1,
            features_per_split: Some(2),
            ..ForestParams::default()
        };
        let f = train_random_forest(&data, &params, 42).unwrap();
        let sample: Vec<_> = bootstrap_indices(60, 42).iter().map(|&i| data[i].clone()).collect();
        let t = train_decision_tree(&sample, &TreeParams::default(), 7).unwrap();
        assert_eq!(f.trees[0].root, t.root);
    }

    #[test]
    fn same_seed_same_bytes() {
        let data = blobs(80, 1);
        let params = ForestParams {
            n_trees: 10,
            ..ForestParams::default()
        };
        let a = serde_json::to_vec(&train_random_forest(&data, &params, 5).unwrap()).unwrap();
        let b = serde_json::to_vec(&train_random_forest(&data, &params, 5).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blobs_oob_accuracy() {
        let data = blobs(200, 11);
        let f = train_random_forest(&data, &ForestParams::default(), 0).unwrap();
        assert_eq!(f.trees.len(), 100);
        assert_eq!(f.features_per_split, 2);
        assert!(f.oob_accuracy.unwrap() >= 0.95);
    }

    #[test]
    fn probability_is_mean_of_leaves() {
        let data = blobs(50, 2);
        let params = ForestParams {
            n_trees: 5,
            max_depth: 3,
            ..ForestParams::default()
        };
        let f = train_random_forest(&data, &params, 9).unwrap();
        for e in &data {
            let mut sum = 0.0;
            for t in &f.trees {
                // walk by hand
                let mut n = &t.root;
                loop {
                    match n {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            n = if e.features[*feature] <= *threshold {
                                left
                            } else {
                                right
                            }
                        }
                        Node::Leaf { probability, .. } => {
                            sum += probability;
                            break;
                        }
                    }
                }
            }
            let p = f.predict_proba(&e.features);
            assert!((p - sum / 5.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn zero_trees_rejected() {
        let params = ForestParams {
            n_trees: 0,
            ..ForestParams::default()
        };
        assert!(train_random_forest(&blobs(10, 0), &params, 0).is_err());
    }
}
