use serde::{Deserialize, Serialize};

use super::{FeatureVector, ModelError, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    /// Position in the input list.
    pub index: usize,
    pub text: String,
    pub score: f64,
}

/// Orders candidates by descending model probability; ties go to the shorter
/// text, then the lexicographically smaller one.
pub fn rank_candidates<S: AsRef<str>>(
    candidates: &[(S, FeatureVector)],
    model: &TrainedModel,
) -> Result<Vec<RankedCandidate>, ModelError> {
    let mut out = candidates
        .iter()
        .enumerate()
        .map(|(index, (text, v))| {
            Ok(RankedCandidate {
                index,
                text: text.as_ref().to_string(),
                score: model.score(v)?,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    sort_ranked(&mut out);
    Ok(out)
}

pub(crate) fn sort_ranked(v: &mut [RankedCandidate]) {
    v.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.text.len().cmp(&b.text.len()))
            .then_with(|| a.text.cmp(&b.text))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Classifier, DecisionTree, FeatureSchema, ModelTier, Node, TrainingMetadata, TreeParams};

    fn model(root: Node) -> TrainedModel {
        let schema = FeatureSchema::for_tier(ModelTier::Baseline);
        let tree = DecisionTree {
            root,
            n_features: schema.len(),
            params: TreeParams::default(),
        };
        let meta = TrainingMetadata {
            seed: 0,
            data_hash: String::new(),
            trained_at: String::new(),
            n_examples: 0,
        };
        TrainedModel::new(schema, Classifier::Tree(tree), meta).unwrap()
    }

    fn leaf(p: f64) -> Node {
        Node::Leaf {
            counts: [1, 1],
            label: (p > 0.5) as u8,
            probability: p,
        }
    }

    fn vector(first: f64) -> FeatureVector {
        FeatureVector {
            schema_id: "hint-baseline".into(),
            values: vec![first, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn single_candidate() {
        let r = rank_candidates(&[("a", vector(1.0))], &model(leaf(0.7))).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].score, 0.7);
    }

    #[test]
    fn ties_prefer_shorter_then_lexicographic() {
        let m = model(leaf(0.5));
        let r = rank_candidates(&[("bbbb", vector(0.0)), ("zz", vector(0.0)), ("aa", vector(0.0))], &m).unwrap();
        let texts: Vec<_> = r.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["aa", "zz", "bbbb"]);
    }

    #[test]
    fn wrong_length_is_schema_mismatch() {
        let mut v = vector(0.0);
        v.values.push(1.0);
        assert!(matches!(
            rank_candidates(&[("a", v)], &model(leaf(0.5))),
            Err(ModelError::SchemaMismatch { expected: 6, found: 7 })
        ));
    }

    #[test]
    fn order_follows_tree_walk() {
        let root = Node::Split {
            feature: 0,
            threshold: 5.0,
            left: Box::new(leaf(0.2)),
            right: Box::new(Node::Split {
                feature: 0,
                threshold: 10.0,
                left: Box::new(leaf(0.9)),
                right: Box::new(leaf(0.6)),
            }),
        };
        let m = model(root);
        let r = rank_candidates(&[("a", vector(1.0)), ("b", vector(7.0)), ("c", vector(12.0))], &m).unwrap();
        assert_eq!(r.iter().map(|c| c.index).collect::<Vec<_>>(), vec![1, 2, 0]);
    }
}
