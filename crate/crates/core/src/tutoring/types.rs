use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::math::GapHint;
use crate::models::ModelTier;

use super::TutorError;

/// An equation expectation with the function names the exercise declares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MathExpectation {
    pub latex: String,
    #[serde(default)]
    pub functions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exercise {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub expectations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub math: Option<MathExpectation>,
    #[serde(default)]
    pub tags: Vec<String>,
    pub difficulty: f64,
}

impl Exercise {
    pub fn validate(&self) -> Result<(), TutorError> {
        let bad = |reason: &str| TutorError::InvalidExercise {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(bad("empty id"));
        }
        if self.question.trim().is_empty() {
            return Err(bad("empty question"));
        }
        if self.expectations.is_empty() && self.math.is_none() {
            return Err(bad("no expectation"));
        }
        if self.expectations.iter().any(|e| e.trim().is_empty()) {
            return Err(bad("empty expectation"));
        }
        if !(0.0..=1.0).contains(&self.difficulty) {
            return Err(bad("difficulty outside [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Grade {
    Correct,
    Incorrect,
}

/// A solution attempt as typed by the student.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Text(String),
    Latex(String),
}

impl Answer {
    pub fn as_str(&self) -> &str {
        match self {
            Answer::Text(s) | Answer::Latex(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Attempt { answer: Answer },
    Help,
    Skip,
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Attempt { .. } => "Attempt",
            Event::Help => "Help",
            Event::Skip => "Skip",
        }
    }

    pub fn is_attempt(&self) -> bool {
        matches!(self, Event::Attempt { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InterventionType {
    TextHint,
    WikiExplanation,
    MathGapHint,
    MathDiffHint,
    Elaboration,
    ConceptTree,
    MultipleChoice,
}

impl InterventionType {
    pub fn is_implemented(self) -> bool {
        matches!(
            self,
            InterventionType::TextHint
                | InterventionType::WikiExplanation
                | InterventionType::MathGapHint
                | InterventionType::MathDiffHint
        )
    }
}

impl fmt::Display for InterventionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Feedback shown to the student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: InterventionType,
    /// Ranking tier that produced the content; math hints have none.
    pub tier: Option<ModelTier>,
    pub content_id: String,
    pub text: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapHint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTurn {
    pub sequence: u64,
    pub exercise_id: String,
    /// 1-based index of the attempt the student is on.
    pub attempt_index: u32,
    pub event: Event,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<Grade>,
    /// Grading similarity in [0, 1] for attempts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<Intervention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpful_rating: Option<bool>,
}

impl InteractionTurn {
    /// Index of the attempt that follows this turn on the same exercise.
    pub fn next_attempt_index(&self) -> u32 {
        if self.event.is_attempt() {
            self.attempt_index + 1
        } else {
            self.attempt_index
        }
    }

    pub fn check(&self) -> Result<(), TutorError> {
        let bad = |reason: &str| TutorError::InvalidTurn {
            sequence: self.sequence,
            reason: reason.to_string(),
        };
        if self.event.is_attempt() != self.grade.is_some() {
            return Err(bad("grade present iff the event is an attempt"));
        }
        if let Some(iv) = &self.intervention {
            let allowed = match self.event {
                Event::Help => true,
                Event::Attempt { .. } => self.grade == Some(Grade::Incorrect),
                Event::Skip => false,
            };
            if !allowed {
                return Err(bad("intervention only after an incorrect attempt or a help request"));
            }
            if !iv.kind.is_implemented() {
                return Err(bad("unimplemented intervention type"));
            }
        }
        if self.attempt_index == 0 {
            return Err(bad("attempt index starts at 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicStat {
    pub attempted: u32,
    pub correct: u32,
}

impl TopicStat {
    pub fn rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.correct as f64 / self.attempted as f64
        }
    }
}

pub const SKILL_INIT: f64 = 0.5;
pub const SKILL_ALPHA: f64 = 0.1;
/// Turns kept for history features.
pub const RECENT_TURNS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub id: String,
    pub attempted: u32,
    pub correct: u32,
    pub incorrect: u32,
    pub skips: u32,
    pub topics: BTreeMap<String, TopicStat>,
    pub exercises: BTreeSet<String>,
    /// Exponential moving average of attempt correctness.
    pub skill: f64,
    /// Most recent turns, oldest first, at most [`RECENT_TURNS`].
    #[serde(default)]
    pub recent: Vec<InteractionTurn>,
}

impl StudentProfile {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            attempted: 0,
            correct: 0,
            incorrect: 0,
            skips: 0,
            topics: BTreeMap::new(),
            exercises: BTreeSet::new(),
            skill: SKILL_INIT,
            recent: Vec::new(),
        }
    }

    pub fn proportion_correct(&self) -> f64 {
        ratio(self.correct, self.attempted)
    }

    pub fn proportion_incorrect(&self) -> f64 {
        ratio(self.incorrect, self.attempted)
    }

    pub fn mean_attempts_per_exercise(&self) -> f64 {
        ratio(self.attempted, self.exercises.len() as u32)
    }

    /// Applies one finalized turn. `tags` are the topic tags of its exercise.
    pub fn record(&mut self, turn: &InteractionTurn, tags: &[String]) {
        match (&turn.event, turn.grade) {
            (Event::Attempt { .. }, Some(grade)) => {
                let ok = grade == Grade::Correct;
                self.attempted += 1;
                if ok {
                    self.correct += 1;
                } else {
                    self.incorrect += 1;
                }
                self.exercises.insert(turn.exercise_id.clone());
                for tag in tags {
                    let stat = self.topics.entry(tag.clone()).or_default();
                    stat.attempted += 1;
                    stat.correct += ok as u32;
                }
                self.skill = (1.0 - SKILL_ALPHA) * self.skill + SKILL_ALPHA * if ok { 1.0 } else { 0.0 };
            }
            (Event::Skip, _) => self.skips += 1,
            _ => {}
        }
        self.recent.push(turn.clone());
        if self.recent.len() > RECENT_TURNS {
            self.recent.remove(0);
        }
    }
}

/// Returns `profile` updated with `turn`.
pub fn update_profile(profile: &StudentProfile, turn: &InteractionTurn, tags: &[String]) -> StudentProfile {
    let mut p = profile.clone();
    p.record(turn, tags);
    p
}

fn ratio(a: u32, b: u32) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
