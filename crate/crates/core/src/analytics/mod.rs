//! Learning gains per ranking tier, exact binomial intervals and the pooled
//! two-proportion z-test.

mod stats;

pub use stats::{
    beta_quantile, clopper_pearson_ci, ln_gamma, normal_cdf, regularized_incomplete_beta, student_t_cdf,
    student_t_quantile, two_proportion_ztest, ZTestResult,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::ModelTier;
use crate::storage::LogRecord;
use crate::tutoring::{Event, Grade, InteractionTurn, InterventionType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("no trials")]
    NoTrials,
    #[error("no rated interventions")]
    NoRatings,
    #[error("invalid counts: {successes} successes of {trials} trials")]
    InvalidCounts { successes: u64, trials: u64 },
    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("zero variance: pooled proportion is 0 or 1")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttemptFilter {
    AllAttempts,
    /// Interventions whose next attempt is the first or second one.
    BeforeSecondAttempt,
}

impl std::str::FromStr for AttemptFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all" | "all-attempts" => Ok(AttemptFilter::AllAttempts),
            "before-second" | "before-second-attempt" => Ok(AttemptFilter::BeforeSecondAttempt),
            other => Err(format!("unknown filter {other:?}")),
        }
    }
}

impl AttemptFilter {
    pub const ALL: [AttemptFilter; 2] = [AttemptFilter::AllAttempts, AttemptFilter::BeforeSecondAttempt];

    pub fn label(self) -> &'static str {
        match self {
            AttemptFilter::AllAttempts => "All Attempts",
            AttemptFilter::BeforeSecondAttempt => "Before Second Attempt",
        }
    }

    /// Short name accepted by `FromStr`.
    pub fn key(self) -> &'static str {
        match self {
            AttemptFilter::AllAttempts => "all",
            AttemptFilter::BeforeSecondAttempt => "before-second",
        }
    }

    fn admits(self, turn: &InteractionTurn) -> bool {
        match self {
            AttemptFilter::AllAttempts => true,
            AttemptFilter::BeforeSecondAttempt => turn.next_attempt_index() <= 2,
        }
    }
}

type StreamKey<'a> = (&'a str, &'a str, &'a str);

/// Turns grouped per (student, session, exercise), in log order.
fn streams(log: &[LogRecord]) -> BTreeMap<StreamKey<'_>, Vec<&InteractionTurn>> {
    let mut out: BTreeMap<StreamKey<'_>, Vec<&InteractionTurn>> = BTreeMap::new();
    for r in log {
        out.entry((
            r.student_id.as_str(),
            r.session_id.as_str(),
            r.turn.exercise_id.as_str(),
        ))
        .or_default()
        .push(&r.turn);
    }
    out
}

/// Successes and trials for one tier. A trial is an intervention served by
/// the tier; it succeeds when the next turn on the same exercise is an
/// attempt graded correct.
pub fn gain_counts(log: &[LogRecord], tier: ModelTier, filter: AttemptFilter) -> (u64, u64) {
    let mut successes = 0;
    let mut trials = 0;
    for turns in streams(log).values() {
        for (i, t) in turns.iter().enumerate() {
            let Some(iv) = &t.intervention else { continue };
            if iv.tier != Some(tier) || !filter.admits(t) {
                continue;
            }
            trials += 1;
            if let Some(next) = turns.get(i + 1) {
                if matches!(next.event, Event::Attempt { .. }) && next.grade == Some(Grade::Correct) {
                    successes += 1;
                }
            }
        }
    }
    (successes, trials)
}

pub fn learning_gain(
    log: &[LogRecord],
    tier: ModelTier,
    filter: AttemptFilter,
) -> Result<(u64, u64, f64), AnalyticsError> {
    let (s, n) = gain_counts(log, tier, filter);
    if n == 0 {
        return Err(AnalyticsError::NoTrials);
    }
    Ok((s, n, s as f64 / n as f64))
}

/// Share of (student, session, exercise) pairs with a rated explanation in
/// which at least one shown explanation was rated helpful.
pub fn helpfulness_rate(log: &[LogRecord]) -> Result<f64, AnalyticsError> {
    let mut rated = 0u64;
    let mut helpful = 0u64;
    for turns in streams(log).values() {
        let ratings: Vec<bool> = turns
            .iter()
            .filter(|t| {
                t.intervention
                    .as_ref()
                    .is_some_and(|iv| iv.kind == InterventionType::WikiExplanation)
            })
            .filter_map(|t| t.helpful_rating)
            .collect();
        if !ratings.is_empty() {
            rated += 1;
            helpful += ratings.iter().any(|&r| r) as u64;
        }
    }
    if rated == 0 {
        return Err(AnalyticsError::NoRatings);
    }
    Ok(helpful as f64 / rated as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCell {
    pub successes: u64,
    pub trials: u64,
    pub proportion: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl GainCell {
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self, AnalyticsError> {
        if trials == 0 {
            return Err(AnalyticsError::NoTrials);
        }
        let (ci_lower, ci_upper) = clopper_pearson_ci(successes, trials, 0.95)?;
        Ok(Self {
            successes,
            trials,
            proportion: successes as f64 / trials as f64,
            ci_lower,
            ci_upper,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierRow {
    pub tier: ModelTier,
    /// `None` when the tier has no trials under the filter.
    pub all_attempts: Option<GainCell>,
    pub before_second_attempt: Option<GainCell>,
}

impl TierRow {
    pub fn cell(&self, filter: AttemptFilter) -> Option<&GainCell> {
        match filter {
            AttemptFilter::AllAttempts => self.all_attempts.as_ref(),
            AttemptFilter::BeforeSecondAttempt => self.before_second_attempt.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub filter: AttemptFilter,
    pub first: ModelTier,
    pub second: ModelTier,
    pub result: ZTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningGainReport {
    pub rows: Vec<TierRow>,
    /// Higher tier against lower tier, for every pair with defined variance.
    pub tests: Vec<PairTest>,
}

const PAIRS: [(ModelTier, ModelTier); 3] = [
    (ModelTier::Deep, ModelTier::Baseline),
    (ModelTier::Deep, ModelTier::Shallow),
    (ModelTier::Shallow, ModelTier::Baseline),
];

impl LearningGainReport {
    pub fn from_log(log: &[LogRecord]) -> Self {
        let cell = |tier, filter| {
            let (s, n) = gain_counts(log, tier, filter);
            GainCell::from_counts(s, n).ok()
        };
        let rows: Vec<TierRow> = ModelTier::ALL
            .iter()
            .map(|&tier| TierRow {
                tier,
                all_attempts: cell(tier, AttemptFilter::AllAttempts),
                before_second_attempt: cell(tier, AttemptFilter::BeforeSecondAttempt),
            })
            .collect();
        let mut tests = Vec::new();
        for filter in AttemptFilter::ALL {
            for (a, b) in PAIRS {
                let get = |t: ModelTier| rows.iter().find(|r| r.tier == t).and_then(|r| r.cell(filter));
                if let (Some(x), Some(y)) = (get(a), get(b)) {
                    if let Ok(result) = two_proportion_ztest(x.successes, x.trials, y.successes, y.trials) {
                        tests.push(PairTest {
                            filter,
                            first: a,
                            second: b,
                            result,
                        });
                    }
                }
            }
        }
        Self { rows, tests }
    }

    pub fn row(&self, tier: ModelTier) -> Option<&TierRow> {
        self.rows.iter().find(|r| r.tier == tier)
    }

    pub fn test(&self, filter: AttemptFilter, first: ModelTier, second: ModelTier) -> Option<&ZTestResult> {
        self.tests
            .iter()
            .find(|t| t.filter == filter && t.first == first && t.second == second)
            .map(|t| &t.result)
    }

    /// Aligned plain-text table: one row per tier, one column per filter.
    pub fn to_text(&self) -> String {
        let fmt_cell = |c: Option<&GainCell>| match c {
            Some(c) => format!(
                "{:6.2}% [{:6.2}%, {:6.2}%] ({}/{})",
                100.0 * c.proportion,
                100.0 * c.ci_lower,
                100.0 * c.ci_upper,
                c.successes,
                c.trials
            ),
            None => "no trials".to_string(),
        };
        let rows: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.tier.to_string(),
                    fmt_cell(r.all_attempts.as_ref()),
                    fmt_cell(r.before_second_attempt.as_ref()),
                ]
            })
            .collect();
        let header = [
            "Model".to_string(),
            AttemptFilter::AllAttempts.label().to_string(),
            AttemptFilter::BeforeSecondAttempt.label().to_string(),
        ];
        let mut widths = [0usize; 3];
        for r in std::iter::once(&header).chain(rows.iter()) {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&header).chain(rows.iter()) {
            let line = format!(
                "{:<w0$}  {:<w1$}  {:<w2$}",
                r[0],
                r[1],
                r[2],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
            out.push_str(line.trim_end());
            out.push('\n');
        }
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{} vs {} ({}): z = {:.4}, p one-tailed = {:.5}, p two-tailed = {:.5}",
                t.first,
                t.second,
                t.filter.label(),
                t.result.z,
                t.result.p_one_tailed,
                t.result.p_two_tailed
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tutoring::{Answer, Intervention};

    fn record(
        student: &str,
        seq: u64,
        attempt_index: u32,
        event: Event,
        grade: Option<Grade>,
        tier: Option<ModelTier>,
    ) -> LogRecord {
        let intervention = tier.map(|t| Intervention {
            id: format!("{student}-{seq}"),
            kind: InterventionType::TextHint,
            tier: Some(t),
            content_id: "h".into(),
            text: "Think about it.".into(),
            score: 0.5,
            gap: None,
        });
        LogRecord {
            student_id: student.into(),
            session_id: format!("{student}-s"),
            timestamp: "2024-01-01T00:00:00Z".into(),
            seed: 0,
            turn: InteractionTurn {
                sequence: seq,
                exercise_id: "e1".into(),
                attempt_index,
                event,
                grade,
                score: None,
                intervention,
                helpful_rating: None,
            },
        }
    }

    fn attempt() -> Event {
        Event::Attempt {
            answer: Answer::Text("a".into()),
        }
    }

    /// attempt 1 wrong + hint, attempt 2 (grade given), optionally attempt 2
    /// wrong + hint, attempt 3.
    fn student(name: &str, tier: ModelTier, second: Grade, third: Option<Grade>) -> Vec<LogRecord> {
        let mut v = vec![record(name, 1, 1, attempt(), Some(Grade::Incorrect), Some(tier))];
        match third {
            None => v.push(record(name, 2, 2, attempt(), Some(second), None)),
            Some(g) => {
                v.push(record(name, 2, 2, attempt(), Some(Grade::Incorrect), Some(tier)));
                v.push(record(name, 3, 3, attempt(), Some(g), None));
            }
        }
        v
    }

    #[test]
    fn counts_and_filter() {
        let mut log = Vec::new();
        log.extend(student("a", ModelTier::Deep, Grade::Correct, None));
        log.extend(student("b", ModelTier::Deep, Grade::Incorrect, Some(Grade::Correct)));
        assert_eq!(gain_counts(&log, ModelTier::Deep, AttemptFilter::AllAttempts), (2, 3));
        assert_eq!(
            gain_counts(&log, ModelTier::Deep, AttemptFilter::BeforeSecondAttempt),
            (1, 2)
        );
        assert_eq!(
            learning_gain(&log, ModelTier::Baseline, AttemptFilter::AllAttempts),
            Err(AnalyticsError::NoTrials)
        );
    }

    #[test]
    fn only_late_intervention_has_no_early_trials() {
        let log = vec![
            record("a", 1, 1, attempt(), Some(Grade::Incorrect), None),
            record("a", 2, 2, attempt(), Some(Grade::Incorrect), Some(ModelTier::Shallow)),
            record("a", 3, 3, attempt(), Some(Grade::Correct), None),
        ];
        assert_eq!(
            learning_gain(&log, ModelTier::Shallow, AttemptFilter::AllAttempts),
            Ok((1, 1, 1.0))
        );
        assert_eq!(
            learning_gain(&log, ModelTier::Shallow, AttemptFilter::BeforeSecondAttempt),
            Err(AnalyticsError::NoTrials)
        );
    }

    #[test]
    fn interventions_without_follow_up() {
        let log = vec![record("a", 1, 1, Event::Help, None, Some(ModelTier::Baseline))];
        assert_eq!(
            learning_gain(&log, ModelTier::Baseline, AttemptFilter::AllAttempts),
            Ok((0, 1, 0.0))
        );
        // help before the first attempt counts as before the second attempt
        assert_eq!(
            gain_counts(&log, ModelTier::Baseline, AttemptFilter::BeforeSecondAttempt),
            (0, 1)
        );
    }

    #[test]
    fn interleaving_students_does_not_matter() {
        let a = student("a", ModelTier::Deep, Grade::Correct, None);
        let b = student("b", ModelTier::Deep, Grade::Incorrect, Some(Grade::Incorrect));
        let mut seq: Vec<_> = a.iter().chain(&b).cloned().collect();
        let mut inter = vec![a[0].clone(), b[0].clone(), b[1].clone(), a[1].clone(), b[2].clone()];
        for f in AttemptFilter::ALL {
            assert_eq!(
                gain_counts(&seq, ModelTier::Deep, f),
                gain_counts(&inter, ModelTier::Deep, f)
            );
        }
        seq.clear();
        inter.clear();
    }

    #[test]
    fn helpfulness_either_or_both() {
        let rated = |student: &str, seq: u64, helpful: bool| {
            let mut r = record(student, seq, 1, Event::Help, None, Some(ModelTier::Deep));
            let iv = r.turn.intervention.as_mut().unwrap();
            iv.kind = InterventionType::WikiExplanation;
            r.turn.helpful_rating = Some(helpful);
            r
        };
        let log = vec![rated("a", 1, false), rated("a", 2, true)];
        assert_eq!(helpfulness_rate(&log), Ok(1.0));
        let mut log = Vec::new();
        for (i, s) in ["a", "b", "c", "d", "e", "f"].iter().enumerate() {
            log.push(rated(s, 1, i != 5));
        }
        assert!((helpfulness_rate(&log).unwrap() - 0.8333).abs() < 1e-4);
        let none: Vec<LogRecord> = log
            .iter()
            .cloned()
            .map(|mut r| {
                r.turn.helpful_rating = Some(false);
                r
            })
            .collect();
        assert_eq!(helpfulness_rate(&none), Ok(0.0));
        assert_eq!(helpfulness_rate(&[]), Err(AnalyticsError::NoRatings));
    }

    #[test]
    fn report_text_has_three_rows() {
        let log = student("a", ModelTier::Deep, Grade::Correct, None);
        let report = LearningGainReport::from_log(&log);
        let text = report.to_text();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("no trials"));
        assert!(text.contains("100.00%"));
    }
}
