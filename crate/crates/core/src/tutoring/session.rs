use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Grade, TutorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionStatus {
    AwaitingAttempt,
    InterventionShown,
    Solved,
    Skipped,
}

impl SessionStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionStatus::Solved | SessionStatus::Skipped)
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub status: SessionStatus,
    pub exercise_id: String,
    /// 1-based index of the next attempt.
    pub attempt_index: u32,
}

impl SessionState {
    pub fn new(exercise_id: impl Into<String>) -> Self {
        Self {
            status: SessionStatus::AwaitingAttempt,
            exercise_id: exercise_id.into(),
            attempt_index: 1,
        }
    }
}

/// What happened, as far as the state machine is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionEvent {
    Attempt(Grade),
    Help,
    Skip,
}

impl fmt::Display for SessionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionEvent::Attempt(g) => write!(f, "Attempt({g:?})"),
            SessionEvent::Help => f.write_str("Help"),
            SessionEvent::Skip => f.write_str("Skip"),
        }
    }
}

/// Transition table. Solved and Skipped are terminal; help and skip are
/// accepted both before and after an intervention.
pub fn advance_session(state: &SessionState, event: SessionEvent) -> Result<SessionState, TutorError> {
    if state.status.is_terminal() {
        return Err(TutorError::IllegalTransition {
            state: state.status,
            event: event.to_string(),
        });
    }
    let mut next = state.clone();
    match event {
        SessionEvent::Attempt(grade) => {
            next.attempt_index += 1;
            next.status = match grade {
                Grade::Correct => SessionStatus::Solved,
                Grade::Incorrect => SessionStatus::InterventionShown,
            };
        }
        SessionEvent::Help => next.status = SessionStatus::InterventionShown,
        SessionEvent::Skip => next.status = SessionStatus::Skipped,
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table() {
        let s = SessionState::new("e");
        assert_eq!(
            advance_session(&s, SessionEvent::Skip).unwrap().status,
            SessionStatus::Skipped
        );
        let wrong = advance_session(&s, SessionEvent::Attempt(Grade::Incorrect)).unwrap();
        assert_eq!(
            (wrong.status, wrong.attempt_index),
            (SessionStatus::InterventionShown, 2)
        );
        let solved = advance_session(&wrong, SessionEvent::Attempt(Grade::Correct)).unwrap();
        assert_eq!(solved.status, SessionStatus::Solved);
        let help = advance_session(&s, SessionEvent::Help).unwrap();
        assert_eq!((help.status, help.attempt_index), (SessionStatus::InterventionShown, 1));
    }

    #[test]
    fn terminal_states_reject() {
        let mut s = SessionState::new("e");
        s.status = SessionStatus::Solved;
        let err = advance_session(&s, SessionEvent::Attempt(Grade::Correct)).unwrap_err();
        assert_eq!(err.to_string(), "illegal transition: Attempt(Correct) in state Solved");
        s.status = SessionStatus::Skipped;
        assert!(advance_session(&s, SessionEvent::Help).is_err());
    }
}
