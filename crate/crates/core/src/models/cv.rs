use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate_examples, ModelError, TrainingExample};
use crate::analytics::student_t_quantile;

pub trait Predictor {
    /// Probability of the positive class.
    fn predict_proba(&self, features: &[f64]) -> f64;

    fn predict(&self, features: &[f64]) -> u8 {
        (self.predict_proba(features) > 0.5) as u8
    }
}

pub trait Trainer {
    type Model: Predictor;

    fn train(&self, examples: &[TrainingExample], seed: u64) -> Result<Self::Model, ModelError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub size: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub f1: f64,
}

/// Mean with a 95% t interval over folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn from_samples(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        if xs.len() < 2 {
            return Self {
                mean,
                lower: mean,
                upper: mean,
            };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
        let half = student_t_quantile(0.975, k - 1.0) * (var / k).sqrt();
        Self {
            mean,
            lower: mean - half,
            upper: mean + half,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k_folds: usize,
    pub folds: Vec<FoldResult>,
    pub accuracy: Interval,
    pub f1: Interval,
}

/// F1 of the positive class. A fold without positives or positive
/// predictions scores 1.
pub fn f1_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Seeded shuffle, then `k` contiguous folds whose sizes differ by at most
/// one. Fold `i` trains with seed `seed + i`.
pub fn cross_validate<T: Trainer>(
    examples: &[TrainingExample],
    k_folds: usize,
    trainer: &T,
    seed: u64,
) -> Result<CvReport, ModelError> {
    validate_examples(examples)?;
    let n = examples.len();
    if k_folds < 2 || k_folds > n {
        return Err(ModelError::FoldCount {
            folds: k_folds,
            examples: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k_folds, n % k_folds);
    let mut folds = Vec::with_capacity(k_folds);
    let mut start = 0;
    for f in 0..k_folds {
        let size = base + (f < extra) as usize;
        let test = &order[start..start + size];
        let train: Vec<TrainingExample> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .map(|&i| examples[i].clone())
            .collect();
        start += size;
        let model = trainer.train(&train, seed.wrapping_add(f as u64))?;
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for &i in test {
            match (model.predict(&examples[i].features), examples[i].label) {
                (1, 1) => tp += 1,
                (1, _) => fp += 1,
                (_, 1) => fn_ += 1,
                _ => tn += 1,
            }
        }
        folds.push(FoldResult {
            size,
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
            accuracy: (tp + tn) as f64 / size as f64,
            f1: f1_score(tp, fp, fn_),
        });
    }
    let acc: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let f1: Vec<f64> = folds.iter().map(|f| f.f1).collect();
    Ok(CvReport {
        k_folds,
        accuracy: Interval::from_samples(&acc),
        f1: Interval::from_samples(&f1),
        folds,
    })
}
