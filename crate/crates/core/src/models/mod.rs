//! Ranking models: tiered feature extraction, decision trees and random
//! forests trained from scratch, SMOTE, k-fold cross-validation and
//! candidate ranking.

mod cv;
mod features;
mod forest;
mod rank;
mod smote;
mod tree;

pub use cv::{cross_validate, f1_score, CvReport, FoldResult, Interval, Predictor, Trainer};
pub use features::{
    extract_features, FeatureResources, FeatureSchema, FeatureVector, BASELINE_FEATURES, HISTORY_TURNS,
    HISTORY_TURN_FEATURES, SHALLOW_FEATURES,
};
pub use forest::{bootstrap_indices, train_random_forest, ForestParams, ForestTrainer, RandomForest};
pub use rank::{rank_candidates, RankedCandidate};
pub use smote::smote_oversample;
pub use tree::{train_decision_tree, DecisionTree, Node, TreeParams, TreeTrainer};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("no training examples")]
    EmptyExamples,
    #[error("examples have no features")]
    NoFeatures,
    #[error("example {index} has {found} features, expected {expected}")]
    InconsistentFeatures {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("example {index} has a non-finite feature")]
    NonFinite { index: usize },
    #[error("example {index} has label {label}, expected 0 or 1")]
    InvalidLabel { index: usize, label: u8 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("minority class has {count} examples, need at least 2")]
    MinorityTooSmall { count: usize },
    #[error("{folds} folds requested for {examples} examples")]
    FoldCount { folds: usize, examples: usize },
    #[error("schema mismatch: model expects {expected} features, got {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("schema hash mismatch")]
    SchemaHash,
    #[error("unknown tier {0:?}")]
    UnknownTier(String),
}

/// Personalization tier of a ranking model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelTier {
    Baseline,
    Shallow,
    Deep,
}

impl ModelTier {
    pub const ALL: [ModelTier; 3] = [ModelTier::Baseline, ModelTier::Shallow, ModelTier::Deep];

    pub fn name(self) -> &'static str {
        match self {
            ModelTier::Baseline => "baseline",
            ModelTier::Shallow => "shallow",
            ModelTier::Deep => "deep",
        }
    }
}

impl fmt::Display for ModelTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ModelTier {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        ModelTier::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownTier(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub features: Vec<f64>,
    /// 1 when the feedback was followed by a correct attempt.
    pub label: u8,
}

impl TrainingExample {
    pub fn new(features: Vec<f64>, label: bool) -> Self {
        Self {
            features,
            label: label as u8,
        }
    }
}

/// Checks shape, finiteness and labels; returns the feature count.
pub fn validate_examples(examples: &[TrainingExample]) -> Result<usize, ModelError> {
    let first = examples.first().ok_or(ModelError::EmptyExamples)?;
    let d = first.features.len();
    if d == 0 {
        return Err(ModelError::NoFeatures);
    }
    for (index, e) in examples.iter().enumerate() {
        if e.features.len() != d {
            return Err(ModelError::InconsistentFeatures {
                index,
                expected: d,
                found: e.features.len(),
            });
        }
        if e.features.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        if e.label > 1 {
            return Err(ModelError::InvalidLabel { index, label: e.label });
        }
    }
    Ok(d)
}

/// SHA-256 over the JSON serialization of `examples`.
pub fn data_hash(examples: &[TrainingExample]) -> String {
    let mut h = Sha256::new();
    for e in examples {
        h.update(serde_json::to_vec(e).expect("examples serialize"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Tree(DecisionTree),
    Forest(RandomForest),
}

impl Classifier {
    pub fn n_features(&self) -> usize {
        match self {
            Classifier::Tree(t) => t.n_features,
            Classifier::Forest(f) => f.n_features,
        }
    }
}

impl Predictor for Classifier {
    fn predict_proba(&self, features: &[f64]) -> f64 {
        match self {
            Classifier::Tree(t) => t.predict_proba(features),
            Classifier::Forest(f) => f.predict_proba(features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub data_hash: String,
    /// ISO-8601 UTC.
    pub trained_at: String,
    pub n_examples: usize,
}

/// A classifier bound to the feature schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema: FeatureSchema,
    pub schema_hash: String,
    pub classifier: Classifier,
    pub metadata: TrainingMetadata,
}

impl TrainedModel {
    pub fn new(schema: FeatureSchema, classifier: Classifier, metadata: TrainingMetadata) -> Result<Self, ModelError> {
        if classifier.n_features() != schema.len() {
            return Err(ModelError::SchemaMismatch {
                expected: schema.len(),
                found: classifier.n_features(),
            });
        }
        Ok(Self {
            schema_hash: schema.hash(),
            schema,
            classifier,
            metadata,
        })
    }

    pub fn tier(&self) -> Option<ModelTier> {
        self.schema.tier
    }

    /// Rejects a model whose stored hash no longer matches its schema.
    pub fn verify(&self) -> Result<(), ModelError> {
        if self.schema.hash() != self.schema_hash {
            return Err(ModelError::SchemaHash);
        }
        if self.classifier.n_features() != self.schema.len() {
            return Err(ModelError::SchemaMismatch {
                expected: self.schema.len(),
                found: self.classifier.n_features(),
            });
        }
        Ok(())
    }

    pub fn score(&self, v: &FeatureVector) -> Result<f64, ModelError> {
        if v.schema_id != self.schema.id || v.values.len() != self.schema.len() {
            return Err(ModelError::SchemaMismatch {
                expected: self.schema.len(),
                found: v.values.len(),
            });
        }
        Ok(self.classifier.predict_proba(&v.values))
    }
}
