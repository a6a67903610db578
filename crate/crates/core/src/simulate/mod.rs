//! Simulated students for desk-scale end-to-end runs.
//!
//! A student with ability `a` answers an exercise of difficulty `d`
//! correctly with probability
//!
//! ```text
//! p = clamp(a * (1 - d / 2) + r * w[tier] * s * o, 0, 1)
//! ```
//!
//! where the second term is present only on attempts that follow an
//! intervention: `r` is the student's responsiveness, `w[tier]` the cohort's
//! weight for the tier the intervention came from (0 for untiered ones),
//! `s` the intervention's score clamped to `[0, 1]` and `o` is 1 when the
//! intervention shares a content term with the expectations, 0 otherwise.
//! A student attempts until correct or until `max_attempts` incorrect
//! attempts, then skips. Explanations get a helpful rating with probability
//! `helpful_rate`.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, SecondsFormat};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ModelTier, TrainingExample};
use crate::storage::{LogLine, LogRecord, RatingRecord};
use crate::text::{tokenize, Tag};
use crate::tutoring::{
    derive_seed, Answer, Event, Exercise, Grade, Intervention, InterventionType, Session, StudentProfile, Tutor,
    TutorError,
};

/// Wrong text answer given on a failed attempt.
pub const WRONG_TEXT: &str = "I do not know.";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("a cohort needs at least one student")]
    NoStudents,
    #[error("invalid cohort parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Tutor(#[from] TutorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedStudent {
    pub id: String,
    pub seed: u64,
    pub ability: f64,
    pub responsiveness: f64,
}

impl SimulatedStudent {
    /// Chance of a correct attempt; `bonus` is `w[tier] * s * o`, or 0 on a
    /// first attempt.
    pub fn success_probability(&self, difficulty: f64, bonus: f64) -> f64 {
        (self.ability * (1.0 - difficulty / 2.0) + self.responsiveness * bonus).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub students: usize,
    pub seed: u64,
    /// Abilities are uniform over `[low, high)`.
    pub ability: (f64, f64),
    pub responsiveness: f64,
    /// Weights for baseline, shallow and deep interventions.
    pub tier_weights: [f64; 3],
    pub max_attempts: u32,
    pub helpful_rate: f64,
}

impl CohortSpec {
    /// Hints make no difference: every tier must show the same gain.
    pub fn null(students: usize, seed: u64) -> Self {
        Self {
            students,
            seed,
            ability: (0.2, 0.6),
            responsiveness: 0.0,
            tier_weights: [1.0; 3],
            max_attempts: 3,
            helpful_rate: 0.8,
        }
    }

    /// Hints help, and more so the richer the tier that picked them.
    pub fn responsive(students: usize, seed: u64) -> Self {
        Self {
            responsiveness: 1.0,
            tier_weights: [0.2, 0.5, 0.8],
            ..Self::null(students, seed)
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.students == 0 {
            return Err(SimulationError::NoStudents);
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let (lo, hi) = self.ability;
        if !(unit(lo) && unit(hi) && lo <= hi) {
            return Err(SimulationError::InvalidParameter(format!("ability range {lo}..{hi}")));
        }
        if !unit(self.responsiveness) {
            return Err(SimulationError::InvalidParameter(format!(
                "responsiveness {}",
                self.responsiveness
            )));
        }
        if !self.tier_weights.iter().all(|&w| unit(w)) {
            return Err(SimulationError::InvalidParameter("tier weights".into()));
        }
        if self.max_attempts == 0 {
            return Err(SimulationError::InvalidParameter("max_attempts 0".into()));
        }
        if !unit(self.helpful_rate) {
            return Err(SimulationError::InvalidParameter(format!(
                "helpful rate {}",
                self.helpful_rate
            )));
        }
        Ok(())
    }

    pub fn cohort(&self) -> Vec<SimulatedStudent> {
        (0..self.students)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, i as u64));
                let (lo, hi) = self.ability;
                let ability = lo + (hi - lo) * rng.gen::<f64>();
                SimulatedStudent {
                    id: format!("student-{i:04}"),
                    seed: rng.next_u64(),
                    ability,
                    responsiveness: self.responsiveness,
                }
            })
            .collect()
    }
}

fn content_terms(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .iter()
        .filter(|t| matches!(t.tag, Tag::Noun | Tag::Adj | Tag::Verb))
        .map(|t| t.stem())
        .collect()
}

fn bonus(spec: &CohortSpec, exercise: &Exercise, iv: &Intervention) -> f64 {
    let Some(tier) = iv.tier else { return 0.0 };
    let expected: BTreeSet<String> = exercise.expectations.iter().flat_map(|e| content_terms(e)).collect();
    let overlap = !content_terms(&iv.text).is_disjoint(&expected);
    if !overlap {
        return 0.0;
    }
    spec.tier_weights[tier as usize] * iv.score.clamp(0.0, 1.0)
}

fn answer(exercise: &Exercise, correct: bool) -> Answer {
    match (exercise.expectations.first(), &exercise.math) {
        (Some(e), _) => Answer::Text(if correct { e.clone() } else { WRONG_TEXT.into() }),
        (None, Some(m)) => Answer::Latex(if correct {
            m.latex.clone()
        } else {
            format!("{}+1", m.latex)
        }),
        (None, None) => Answer::Text(WRONG_TEXT.into()),
    }
}

fn timestamp(student: usize, tick: u64) -> String {
    let t = DateTime::UNIX_EPOCH + Duration::days(20_000) + Duration::seconds(student as i64 * 1_000_000 + tick as i64);
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn run_student(
    tutor: &Tutor,
    spec: &CohortSpec,
    index: usize,
    student: &SimulatedStudent,
) -> Result<Vec<LogLine>, SimulationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(student.seed);
    let mut profile = StudentProfile::new(&student.id);
    let mut lines = Vec::new();
    let mut tick = 0u64;
    for (k, exercise) in tutor.exercises().iter().enumerate() {
        let mut session = Session::new(
            format!("{}-{}", student.id, exercise.id),
            &student.id,
            &exercise.id,
            derive_seed(student.seed, k as u64),
        );
        let mut last_bonus = 0.0;
        let mut failures = 0;
        loop {
            let event = if failures >= spec.max_attempts {
                Event::Skip
            } else {
                let p = student.success_probability(exercise.difficulty, last_bonus);
                Event::Attempt {
                    answer: answer(exercise, rng.gen::<f64>() < p),
                }
            };
            let seed = session.turn_seed();
            let turn = tutor.respond(&mut session, &mut profile, event, seed)?;
            tick += 1;
            if turn.grade == Some(Grade::Incorrect) {
                failures += 1;
            }
            last_bonus = turn.intervention.as_ref().map_or(0.0, |iv| bonus(spec, exercise, iv));
            let rating = turn
                .intervention
                .as_ref()
                .filter(|iv| iv.kind == InterventionType::WikiExplanation)
                .map(|iv| RatingRecord {
                    student_id: student.id.clone(),
                    session_id: session.id.clone(),
                    intervention_id: iv.id.clone(),
                    helpful: rng.gen_bool(spec.helpful_rate),
                    timestamp: timestamp(index, tick),
                });
            lines.push(LogLine::Turn(LogRecord {
                student_id: student.id.clone(),
                session_id: session.id.clone(),
                timestamp: timestamp(index, tick),
                seed,
                turn,
            }));
            if let Some(r) = rating {
                lines.push(LogLine::Rating(r));
            }
            if session.state.status.is_terminal() {
                break;
            }
        }
    }
    Ok(lines)
}

/// Runs every student of the cohort through every exercise of the tutor's
/// bank. Students run in parallel; the log lists them in cohort order, so
/// the output depends only on `tutor` and `spec`.
pub fn simulate(tutor: &Tutor, spec: &CohortSpec) -> Result<Vec<LogLine>, SimulationError> {
    spec.validate()?;
    let per_student: Vec<Vec<LogLine>> = spec
        .cohort()
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_student(tutor, spec, i, s))
        .collect::<Result<_, _>>()?;
    Ok(per_student.into_iter().flatten().collect())
}

/// Labelled feature vectors for exercising the classifiers: labels are
/// Bernoulli(`positive_rate`) and positives have the first half of their
/// features shifted up by one standard deviation.
pub fn synthetic_examples(n: usize, n_features: usize, positive_rate: f64, seed: u64) -> Vec<TrainingExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n)
        .map(|_| {
            let label = rng.gen_bool(positive_rate);
            let features = (0..n_features)
                .map(|j| normal.sample(&mut rng) + if label && j < n_features.div_ceil(2) { 1.0 } else { 0.0 })
                .collect();
            TrainingExample::new(features, label)
        })
        .collect()
}

/// Tier features of the synthetic set.
pub fn synthetic_tier_examples(tier: ModelTier, n: usize, seed: u64) -> Vec<TrainingExample> {
    let d = crate::models::FeatureSchema::for_tier(tier).len();
    synthetic_examples(n, d, 0.3, seed)
}
