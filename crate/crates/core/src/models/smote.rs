use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{validate_examples, ModelError, TrainingExample};

fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Adds synthetic minority examples until `majority / minority` is within one
/// example of `target_ratio`. Each synthetic point is `x + u (n - x)` for a
/// random minority point `x`, one of its `k_neighbors` nearest minority
/// neighbours `n` and `u` uniform in `[0, 1)`. Output is the input followed by
/// the synthetic points.
pub fn smote_oversample(
    examples: &[TrainingExample],
    k_neighbors: usize,
    target_ratio: f64,
    seed: u64,
) -> Result<Vec<TrainingExample>, ModelError> {
    validate_examples(examples)?;
    if k_neighbors == 0 {
        return Err(ModelError::InvalidParameter("k_neighbors must be at least 1".into()));
    }
    if !(target_ratio > 0.0 && target_ratio.is_finite()) {
        return Err(ModelError::InvalidParameter(format!("target ratio {target_ratio}")));
    }
    let positives = examples.iter().filter(|e| e.label == 1).count();
    let negatives = examples.len() - positives;
    let (minority_label, minority, majority) = if positives <= negatives {
        (1u8, positives, negatives)
    } else {
        (0u8, negatives, positives)
    };
    if minority < 2 {
        return Err(ModelError::MinorityTooSmall { count: minority });
    }
    let target = (majority as f64 / target_ratio).round() as usize;
    let mut out = examples.to_vec();
    if minority >= target {
        return Ok(out);
    }
    let pool: Vec<&TrainingExample> = examples.iter().filter(|e| e.label == minority_label).collect();
    let k = k_neighbors.min(pool.len() - 1);
    let neighbours: Vec<Vec<usize>> = (0..pool.len())
        .map(|i| {
            let mut others: Vec<usize> = (0..pool.len()).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                distance2(&pool[i].features, &pool[a].features)
                    .total_cmp(&distance2(&pool[i].features, &pool[b].features))
                    .then(a.cmp(&b))
            });
            others.truncate(k);
            others
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in minority..target {
        let i = rng.gen_range(0..pool.len());
        let j = neighbours[i][rng.gen_range(0..k)];
        let u: f64 = rng.gen();
        let (x, n) = (&pool[i].features, &pool[j].features);
        let features = x.iter().zip(n).map(|(a, b)| a + u * (b - a)).collect();
        out.push(TrainingExample {
            features,
            label: minority_label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_input_unchanged() {
        let data: Vec<_> = (0..6)
            .map(|i| TrainingExample::new(vec![i as f64], i % 2 == 0))
            .collect();
        assert_eq!(smote_oversample(&data, 3, 1.0, 0).unwrap(), data);
    }

    #[test]
    fn two_points_give_segment() {
        let p = [1.0, 2.0];
        let q = [4.0, -1.0];
        let mut data = vec![
            TrainingExample::new(p.to_vec(), true),
            TrainingExample::new(q.to_vec(), true),
        ];
        data.extend((0..3).map(|i| TrainingExample::new(vec![10.0 + i as f64, 0.0], false)));
        let out = smote_oversample(&data, 5, 1.0, 7).unwrap();
        assert_eq!(out.len(), 6);
        let s = &out[5].features;
        // collinear with p and q, and between them
        let cross = (q[0] - p[0]) * (s[1] - p[1]) - (q[1] - p[1]) * (s[0] - p[0]);
        assert!(cross.abs() < 1e-9);
        let t = (s[0] - p[0]) / (q[0] - p[0]);
        assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn one_minority_point_is_error() {
        let data = vec![
            TrainingExample::new(vec![0.0], true),
            TrainingExample::new(vec![1.0], false),
            TrainingExample::new(vec![2.0], false),
        ];
        assert_eq!(
            smote_oversample(&data, 1, 1.0, 0),
            Err(ModelError::MinorityTooSmall { count: 1 })
        );
    }

    #[test]
    fn partial_ratio() {
        let mut data: Vec<_> = (0..40).map(|i| TrainingExample::new(vec![i as f64], false)).collect();
        data.extend((0..4).map(|i| TrainingExample::new(vec![i as f64 * 0.5], true)));
        let out = smote_oversample(&data, 2, 2.0, 1).unwrap();
        assert_eq!(out.iter().filter(|e| e.label == 1).count(), 20);
    }
}
