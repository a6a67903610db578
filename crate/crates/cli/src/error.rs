use thiserror::Error;
use tutorloop::analytics::AnalyticsError;
use tutorloop::hints::HintError;
use tutorloop::math::MathError;
use tutorloop::models::ModelError;
use tutorloop::simulate::SimulationError;
use tutorloop::storage::StorageError;
use tutorloop::tutoring::TutorError;
use tutorloop::wiki::WikiError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Hint(#[from] HintError),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Tutor(#[from] TutorError),
    #[error(transparent)]
    Wiki(#[from] WikiError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// `SomeVariant { .. }` or `SomeVariant(..)` as `some_variant`.
fn variant_name<E: std::fmt::Debug>(e: &E) -> String {
    let debug = format!("{e:?}");
    let name: String = debug.chars().take_while(|c| c.is_alphanumeric()).collect();
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

impl CliError {
    /// `module.variant`, e.g. `tutoring.illegal_transition`.
    pub fn code(&self) -> String {
        let (module, variant) = match self {
            CliError::Usage(_) => ("cli", "usage".to_string()),
            CliError::Config(_) => ("interface", "config".to_string()),
            CliError::Analytics(e) => ("analytics", variant_name(e)),
            CliError::Hint(e) => ("hint_generation", variant_name(e)),
            CliError::Math(e) => ("math_hints", variant_name(e)),
            CliError::Model(e) => ("feedback_models", variant_name(e)),
            CliError::Simulation(e) => ("simulate", variant_name(e)),
            CliError::Storage(e) => ("storage", variant_name(e)),
            CliError::Tutor(e) => ("tutoring_core", variant_name(e)),
            CliError::Wiki(e) => ("wiki_explanations", variant_name(e)),
            CliError::Io(_) => ("interface", "io".to_string()),
        };
        format!("{module}.{variant}")
    }

    /// 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tutorloop::tutoring::SessionStatus;

    #[test]
    fn codes() {
        let e = CliError::from(TutorError::IllegalTransition {
            state: SessionStatus::Solved,
            event: "Help".into(),
        });
        assert_eq!(e.code(), "tutoring_core.illegal_transition");
        assert_eq!(CliError::from(MathError::EmptyInput).code(), "math_hints.empty_input");
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(e.exit_code(), 1);
    }
}
