//! The inner loop: grade an attempt, keep the student profile and session
//! state, and pick a pedagogical intervention.

mod engine;
mod grading;
mod policy;
mod session;
mod types;

pub use engine::{derive_seed, heuristic_score, replay, training_examples, ReplayOutcome, Session, Tutor, TutorConfig};
pub use grading::{grade_attempt, math_context, text_similarity, Grading, DEFAULT_THRESHOLD, GRADING_SEED};
pub use policy::{choose_intervention, zpd_band, zpd_filter, Mode, PoolEntry, STOCK_HINT, ZPD_WIDTH};
pub use session::{advance_session, SessionEvent, SessionState, SessionStatus};
pub use types::*;

use thiserror::Error;

use crate::hints::HintError;
use crate::models::ModelError;
use crate::text::TextError;
use crate::wiki::WikiError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TutorError {
    #[error("exercise {id:?}: {reason}")]
    InvalidExercise { id: String, reason: String },
    #[error("turn {sequence}: {reason}")]
    InvalidTurn { sequence: u64, reason: String },
    #[error("illegal transition: {event} in state {state}")]
    IllegalTransition { state: SessionStatus, event: String },
    #[error("empty attempt")]
    EmptyAttempt,
    #[error("unknown exercise {0:?}")]
    UnknownExercise(String),
    #[error("replay of session {session:?} diverged at turn {sequence}")]
    ReplayMismatch { session: String, sequence: u64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Hint(#[from] HintError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Wiki(#[from] WikiError),
}
