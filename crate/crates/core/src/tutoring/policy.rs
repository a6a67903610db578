use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::InterventionType;
use crate::math::GapHint;
use crate::models::ModelTier;

/// Half-width of the ZPD score band around the skill estimate.
pub const ZPD_WIDTH: f64 = 0.35;

pub const STOCK_HINT: &str = "Re-read the question and compare your answer with each of its key terms.";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Serve a uniformly drawn tier.
    #[default]
    Experiment,
    /// Serve the highest-scoring candidate.
    Production,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Experiment => "experiment",
            Mode::Production => "production",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "experiment" => Ok(Mode::Experiment),
            "production" => Ok(Mode::Production),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// A candidate intervention before it is shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub kind: InterventionType,
    pub tier: Option<ModelTier>,
    pub content_id: String,
    pub text: String,
    pub score: f64,
    pub gap: Option<GapHint>,
}

impl PoolEntry {
    pub fn stock() -> Self {
        Self {
            kind: InterventionType::TextHint,
            tier: None,
            content_id: "stock:reread".into(),
            text: STOCK_HINT.into(),
            score: 0.0,
            gap: None,
        }
    }

    fn is_math(&self) -> bool {
        matches!(
            self.kind,
            InterventionType::MathGapHint | InterventionType::MathDiffHint
        )
    }
}

/// Score band for `skill`. Model scores and skill share the unit interval,
/// so the map between them is the identity.
pub fn zpd_band(skill: f64, width: f64) -> (f64, f64) {
    (skill - width, skill + width)
}

/// Drops entries outside the band unless that would drop all of them.
pub fn zpd_filter(pool: &[PoolEntry], skill: f64, width: f64) -> Vec<PoolEntry> {
    let (lo, hi) = zpd_band(skill, width);
    let kept: Vec<PoolEntry> = pool.iter().filter(|e| (lo..=hi).contains(&e.score)).cloned().collect();
    if kept.is_empty() {
        pool.to_vec()
    } else {
        kept
    }
}

fn better(a: &PoolEntry, b: &PoolEntry) -> bool {
    a.score
        .total_cmp(&b.score)
        .then(b.text.len().cmp(&a.text.len()))
        .then_with(|| b.text.cmp(&a.text))
        .is_gt()
}

fn best(entries: impl Iterator<Item = PoolEntry>) -> Option<PoolEntry> {
    entries.fold(None, |acc, e| match acc {
        Some(a) if !better(&e, &a) => Some(a),
        _ => Some(e),
    })
}

/// Picks one entry. Math entries come first, in pool order. Otherwise the
/// tiered entries are ZPD-filtered; experiment mode then draws a tier
/// uniformly with `seed`, production mode takes the best score. `None` only
/// for an empty pool.
pub fn choose_intervention(pool: &[PoolEntry], skill: f64, width: f64, mode: Mode, seed: u64) -> Option<PoolEntry> {
    if let Some(m) = pool.iter().find(|e| e.is_math()) {
        return Some(m.clone());
    }
    let filtered = zpd_filter(pool, skill, width);
    match mode {
        Mode::Production => best(filtered.into_iter()),
        Mode::Experiment => {
            let tiers: Vec<Option<ModelTier>> = filtered
                .iter()
                .map(|e| e.tier)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if tiers.is_empty() {
                return None;
            }
            let t = tiers[ChaCha8Rng::seed_from_u64(seed).gen_range(0..tiers.len())];
            best(filtered.into_iter().filter(|e| e.tier == t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(tier: ModelTier, score: f64, text: &str) -> PoolEntry {
        PoolEntry {
            kind: InterventionType::TextHint,
            tier: Some(tier),
            content_id: text.into(),
            text: text.into(),
            score,
            gap: None,
        }
    }

    fn pool() -> Vec<PoolEntry> {
        vec![
            entry(ModelTier::Baseline, 0.4, "b"),
            entry(ModelTier::Shallow, 0.5, "s"),
            entry(ModelTier::Deep, 0.6, "d"),
        ]
    }

    #[test]
    fn experiment_tiers_are_uniform() {
        let mut counts = [0usize; 3];
        for seed in 0..300 {
            let e = choose_intervention(&pool(), 0.5, ZPD_WIDTH, Mode::Experiment, seed).unwrap();
            counts[e.tier.unwrap() as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / 300.0;
            assert!((f - 1.0 / 3.0).abs() <= 0.08, "{counts:?}");
        }
    }

    #[test]
    fn same_seed_same_choice() {
        for seed in 0..20 {
            assert_eq!(
                choose_intervention(&pool(), 0.5, ZPD_WIDTH, Mode::Experiment, seed),
                choose_intervention(&pool(), 0.5, ZPD_WIDTH, Mode::Experiment, seed)
            );
        }
    }

    #[test]
    fn production_takes_best() {
        let e = choose_intervention(&pool(), 0.5, ZPD_WIDTH, Mode::Production, 0).unwrap();
        assert_eq!(e.text, "d");
    }

    #[test]
    fn zpd_band_filters_unless_empty() {
        let p = vec![
            entry(ModelTier::Baseline, 0.95, "far"),
            entry(ModelTier::Deep, 0.3, "near"),
        ];
        assert_eq!(zpd_filter(&p, 0.2, ZPD_WIDTH).len(), 1);
        assert_eq!(zpd_filter(&p, -2.0, ZPD_WIDTH).len(), 2);
        let e = choose_intervention(&p, 0.2, ZPD_WIDTH, Mode::Production, 0).unwrap();
        assert_eq!(e.text, "near");
    }

    #[test]
    fn math_first_and_empty_pool() {
        let mut p = pool();
        p.push(PoolEntry {
            kind: InterventionType::MathGapHint,
            tier: None,
            content_id: "gap".into(),
            text: "gap".into(),
            score: 1.0,
            gap: None,
        });
        assert_eq!(
            choose_intervention(&p, 0.5, ZPD_WIDTH, Mode::Experiment, 1)
                .unwrap()
                .kind,
            InterventionType::MathGapHint
        );
        assert_eq!(choose_intervention(&[], 0.5, ZPD_WIDTH, Mode::Experiment, 1), None);
    }
}
