use std::io::Read;

use serde::{Deserialize, Serialize};

use super::HintError;

pub const SLOT: &str = "{span}";

/// A discourse prefix with one `{span}` slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCue")]
pub struct DiscourseCue {
    pub cue_id: String,
    pub template: String,
    /// Introducer the span must open with; `None` marks a generic cue.
    pub required_introducer: Option<String>,
}

#[derive(Deserialize)]
struct RawCue {
    cue_id: String,
    template: String,
    #[serde(default)]
    required_introducer: Option<String>,
}

impl TryFrom<RawCue> for DiscourseCue {
    type Error = HintError;

    fn try_from(raw: RawCue) -> Result<Self, HintError> {
        DiscourseCue::new(raw.cue_id, raw.template, raw.required_introducer)
    }
}

impl DiscourseCue {
    pub fn new(
        cue_id: impl Into<String>,
        template: impl Into<String>,
        required_introducer: Option<String>,
    ) -> Result<Self, HintError> {
        let cue_id = cue_id.into();
        let template = template.into();
        let slots = template.matches(SLOT).count();
        if slots != 1 {
            return Err(HintError::InvalidCue {
                cue_id,
                reason: format!("template has {slots} slots, expected 1"),
            });
        }
        Ok(Self {
            cue_id,
            template,
            required_introducer: required_introducer.map(|s| s.to_lowercase()),
        })
    }

    pub fn is_generic(&self) -> bool {
        self.required_introducer.is_none()
    }

    pub fn fill(&self, span: &str) -> String {
        self.template.replacen(SLOT, span, 1)
    }
}

/// The built-in inventory keyed on `when`, `if`, `because`, `that` and a
/// generic fallback.
pub fn default_cues() -> Vec<DiscourseCue> {
    let cue = |id: &str, template: &str, intro: Option<&str>| DiscourseCue {
        cue_id: id.to_string(),
        template: template.to_string(),
        required_introducer: intro.map(str::to_string),
    };
    vec![
        cue("case-when", "Think about the case {span}", Some("when")),
        cue("what-if", "Think about what happens {span}", Some("if")),
        cue("reason-because", "Remember that this holds {span}", Some("because")),
        cue("keep-in-mind-that", "Keep in mind {span}", Some("that")),
        cue("consider", "Consider that {span}.", None),
    ]
}

/// Reads a JSON list of `{cue_id, template, required_introducer}`.
pub fn load_cues<R: Read>(reader: R) -> Result<Vec<DiscourseCue>, HintError> {
    let cues: Vec<DiscourseCue> = serde_json::from_reader(reader).map_err(|e| HintError::Json(e.to_string()))?;
    if cues.is_empty() {
        return Err(HintError::EmptyCues);
    }
    Ok(cues)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_have_one_slot() {
        let cues = default_cues();
        assert_eq!(cues.len(), 5);
        for c in &cues {
            assert!(DiscourseCue::new(c.cue_id.clone(), c.template.clone(), c.required_introducer.clone()).is_ok());
        }
        assert_eq!(cues.iter().filter(|c| c.is_generic()).count(), 1);
    }

    #[test]
    fn slot_count_checked() {
        assert!(DiscourseCue::new("x", "no slot", None).is_err());
        assert!(DiscourseCue::new("x", "{span} and {span}", None).is_err());
        let json = r#"[{"cue_id": "a", "template": "Look {span}"}, {"cue_id": "b", "template": "bad"}]"#;
        assert!(matches!(load_cues(json.as_bytes()), Err(HintError::Json(_))));
    }

    #[test]
    fn loads_file_format() {
        let json = r#"[{"cue_id": "w", "template": "Think about the case {span}", "required_introducer": "When"}]"#;
        let cues = load_cues(json.as_bytes()).unwrap();
        assert_eq!(cues[0].required_introducer.as_deref(), Some("when"));
        assert!(matches!(load_cues("[]".as_bytes()), Err(HintError::EmptyCues)));
    }
}
