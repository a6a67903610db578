use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grading::{grade_attempt, math_context, text_similarity, Grading, DEFAULT_THRESHOLD};
use super::policy::{choose_intervention, Mode, PoolEntry, ZPD_WIDTH};
use super::session::{advance_session, SessionEvent, SessionState};
use super::{
    Answer, Event, Exercise, Grade, InteractionTurn, Intervention, InterventionType, StudentProfile, TutorError,
};
use crate::hints::extract_question_keywords;
use crate::hints::{generate_candidates, DiscourseCue, HintCandidate};
use crate::math::{make_gap_hint, BlankingPolicy, EquivalenceVerdict};
use crate::models::{
    extract_features, rank_candidates, FeatureResources, FeatureSchema, ModelTier, TrainedModel, TrainingExample,
};
use crate::storage::LogRecord;
use crate::text::{tokenize, topic_overlap};
use crate::wiki::{score_and_select, ArticleIndex, ExplanationCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TutorConfig {
    pub mode: Mode,
    /// Cosine needed for a text attempt to count as correct.
    pub threshold: f64,
    pub zpd_width: f64,
}

impl Default for TutorConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Experiment,
            threshold: DEFAULT_THRESHOLD,
            zpd_width: ZPD_WIDTH,
        }
    }
}

/// One student working on one exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub student_id: String,
    pub seed: u64,
    pub state: SessionState,
    pub next_sequence: u64,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        student_id: impl Into<String>,
        exercise_id: impl Into<String>,
        seed: u64,
    ) -> Self {
        Self {
            id: id.into(),
            student_id: student_id.into(),
            seed,
            state: SessionState::new(exercise_id),
            next_sequence: 1,
        }
    }

    /// Seed for the next turn's random choices.
    pub fn turn_seed(&self) -> u64 {
        derive_seed(self.seed, self.next_sequence)
    }
}

/// SplitMix64 of `base` mixed with `n`.
pub fn derive_seed(base: u64, n: u64) -> u64 {
    let mut z = base ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stand-in score for a tier without a trained model: the mean of the
/// best TF-IDF cosine and topic overlap with an expectation and a length
/// term saturating at twelve words.
pub fn heuristic_score(text: &str, exercise: &Exercise, res: &FeatureResources) -> f64 {
    let cos = exercise
        .expectations
        .iter()
        .map(|e| text_similarity(text, e, res))
        .fold(0.0, f64::max);
    let topic = exercise
        .expectations
        .iter()
        .map(|e| topic_overlap(text, e))
        .fold(0.0, f64::max);
    let words = tokenize(text).iter().filter(|t| !t.is_punct()).count() as f64;
    (cos + topic + (words / 12.0).min(1.0)) / 3.0
}

/// The inner loop: grading, hint pools per tier and intervention choice.
#[derive(Debug, Clone)]
pub struct Tutor {
    bank: Vec<Exercise>,
    by_id: BTreeMap<String, usize>,
    resources: FeatureResources,
    models: BTreeMap<ModelTier, TrainedModel>,
    config: TutorConfig,
    hints: BTreeMap<String, Vec<HintCandidate>>,
    explanations: BTreeMap<String, ExplanationCandidate>,
}

impl Tutor {
    pub fn new(bank: Vec<Exercise>, cues: &[DiscourseCue], config: TutorConfig) -> Result<Self, TutorError> {
        let mut by_id = BTreeMap::new();
        for (i, e) in bank.iter().enumerate() {
            e.validate()?;
            math_context(e)?;
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(TutorError::InvalidExercise {
                    id: e.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
        }
        let resources = FeatureResources::from_bank(&bank)?;
        let mut hints = BTreeMap::new();
        for e in &bank {
            hints.insert(e.id.clone(), generate_candidates(e, cues)?);
        }
        Ok(Self {
            bank,
            by_id,
            resources,
            models: BTreeMap::new(),
            config,
            hints,
            explanations: BTreeMap::new(),
        })
    }

    /// Installs a ranking model for the tier named in its schema.
    pub fn with_model(mut self, model: TrainedModel) -> Result<Self, TutorError> {
        model.verify()?;
        let tier = model
            .tier()
            .ok_or_else(|| TutorError::Config("model has no tier".into()))?;
        if model.schema != FeatureSchema::for_tier(tier) {
            return Err(TutorError::Config(format!(
                "model schema does not match the {tier} tier"
            )));
        }
        self.models.insert(tier, model);
        Ok(self)
    }

    /// Picks the best explanation per exercise over the question's keywords.
    pub fn with_wiki(mut self, index: &ArticleIndex, model: &TrainedModel) -> Result<Self, TutorError> {
        model.verify()?;
        for e in &self.bank {
            let mut best: Option<ExplanationCandidate> = None;
            for k in extract_question_keywords(&e.question).texts() {
                if let Some(c) = score_and_select(k, index, model)? {
                    if best.as_ref().is_none_or(|b| c.quality > b.quality) {
                        best = Some(c);
                    }
                }
            }
            if let Some(b) = best {
                self.explanations.insert(e.id.clone(), b);
            }
        }
        Ok(self)
    }

    pub fn config(&self) -> &TutorConfig {
        &self.config
    }

    pub fn exercises(&self) -> &[Exercise] {
        &self.bank
    }

    pub fn exercise(&self, id: &str) -> Result<&Exercise, TutorError> {
        self.by_id
            .get(id)
            .map(|&i| &self.bank[i])
            .ok_or_else(|| TutorError::UnknownExercise(id.to_string()))
    }

    pub fn resources(&self) -> &FeatureResources {
        &self.resources
    }

    pub fn model(&self, tier: ModelTier) -> Option<&TrainedModel> {
        self.models.get(&tier)
    }

    pub fn hints(&self, exercise_id: &str) -> &[HintCandidate] {
        self.hints.get(exercise_id).map_or(&[], Vec::as_slice)
    }

    pub fn explanation(&self, exercise_id: &str) -> Option<&ExplanationCandidate> {
        self.explanations.get(exercise_id)
    }

    pub fn grade(&self, answer: &Answer, exercise: &Exercise) -> Result<Grading, TutorError> {
        grade_attempt(answer, exercise, self.config.threshold, &self.resources)
    }

    /// Text candidates of an exercise: its hints, then its explanation.
    fn text_candidates(&self, exercise: &Exercise) -> Vec<(InterventionType, String, String)> {
        let mut out: Vec<_> = self
            .hints(&exercise.id)
            .iter()
            .enumerate()
            .map(|(k, h)| {
                (
                    InterventionType::TextHint,
                    format!("hint:{}:{}:{}", exercise.id, k, h.cue_id),
                    h.text.clone(),
                )
            })
            .collect();
        if let Some(x) = self.explanation(&exercise.id) {
            out.push((
                InterventionType::WikiExplanation,
                format!("wiki:{}:{}-{}", x.title, x.sentences.0, x.sentences.1),
                x.text.clone(),
            ));
        }
        out
    }

    /// Top-ranked text candidate per tier, then math hints when the exercise
    /// has a math expectation.
    pub fn build_pool(
        &self,
        exercise: &Exercise,
        profile: &StudentProfile,
        history: &[InteractionTurn],
        grading: Option<&Grading>,
        seed: u64,
    ) -> Result<Vec<PoolEntry>, TutorError> {
        let mut pool = Vec::new();
        let candidates = self.text_candidates(exercise);
        if !candidates.is_empty() {
            for tier in ModelTier::ALL {
                let scores: Vec<f64> = match self.models.get(&tier) {
                    Some(model) => {
                        let inputs: Vec<_> = candidates
                            .iter()
                            .map(|(_, _, text)| {
                                (
                                    text.as_str(),
                                    extract_features(text, exercise, profile, history, tier, &self.resources),
                                )
                            })
                            .collect();
                        let ranked = rank_candidates(&inputs, model)?;
                        let mut s = vec![0.0; candidates.len()];
                        for r in ranked {
                            s[r.index] = r.score;
                        }
                        s
                    }
                    None => candidates
                        .iter()
                        .map(|(_, _, t)| heuristic_score(t, exercise, &self.resources))
                        .collect(),
                };
                let top = (0..candidates.len())
                    .max_by(|&a, &b| {
                        scores[a]
                            .total_cmp(&scores[b])
                            .then(candidates[b].2.len().cmp(&candidates[a].2.len()))
                            .then_with(|| candidates[b].2.cmp(&candidates[a].2))
                    })
                    .expect("non-empty candidates");
                let (kind, id, text) = &candidates[top];
                pool.push(PoolEntry {
                    kind: *kind,
                    tier: Some(tier),
                    content_id: id.clone(),
                    text: text.clone(),
                    score: scores[top],
                    gap: None,
                });
            }
        }
        if let Some((_, expected)) = math_context(exercise)? {
            if let Some(EquivalenceVerdict::Different(diff)) = grading.and_then(|g| g.verdict.as_ref()) {
                pool.push(PoolEntry {
                    kind: InterventionType::MathDiffHint,
                    tier: None,
                    content_id: format!("diff:{}:{:?}", exercise.id, diff.kind),
                    text: diff.message(),
                    score: 1.0,
                    gap: None,
                });
            }
            if let Ok(gap) = make_gap_hint(&expected, BlankingPolicy::BlankOneLeaf, seed) {
                pool.push(PoolEntry {
                    kind: InterventionType::MathGapHint,
                    tier: None,
                    content_id: format!("gap:{}:{:?}", exercise.id, gap.slots),
                    text: format!("Fill in the blank: {}", gap.rendered),
                    score: 1.0,
                    gap: Some(gap),
                });
            }
        }
        Ok(pool)
    }

    /// Chosen intervention, or the stock hint for an empty pool.
    pub fn select_intervention(
        &self,
        exercise: &Exercise,
        profile: &StudentProfile,
        history: &[InteractionTurn],
        grading: Option<&Grading>,
        seed: u64,
    ) -> Result<PoolEntry, TutorError> {
        let pool = self.build_pool(exercise, profile, history, grading, seed)?;
        Ok(
            choose_intervention(&pool, profile.skill, self.config.zpd_width, self.config.mode, seed)
                .unwrap_or_else(PoolEntry::stock),
        )
    }

    /// Handles one event: grades attempts, advances the session, attaches an
    /// intervention after an incorrect attempt or a help request, and records
    /// the turn in the profile.
    pub fn respond(
        &self,
        session: &mut Session,
        profile: &mut StudentProfile,
        event: Event,
        seed: u64,
    ) -> Result<InteractionTurn, TutorError> {
        if session.state.status.is_terminal() {
            return Err(TutorError::IllegalTransition {
                state: session.state.status,
                event: event.name().to_string(),
            });
        }
        let exercise = self.exercise(&session.state.exercise_id)?;
        let grading = match &event {
            Event::Attempt { answer } => Some(self.grade(answer, exercise)?),
            _ => None,
        };
        let sevent = match (&event, &grading) {
            (Event::Attempt { .. }, Some(g)) => SessionEvent::Attempt(g.grade),
            (Event::Help, _) => SessionEvent::Help,
            _ => SessionEvent::Skip,
        };
        let next = advance_session(&session.state, sevent)?;
        let mut turn = InteractionTurn {
            sequence: session.next_sequence,
            exercise_id: exercise.id.clone(),
            attempt_index: session.state.attempt_index,
            event,
            grade: grading.as_ref().map(|g| g.grade),
            score: grading.as_ref().map(|g| g.score),
            intervention: None,
            helpful_rating: None,
        };
        let wants_help = matches!(sevent, SessionEvent::Help | SessionEvent::Attempt(Grade::Incorrect));
        if wants_help {
            let mut history = profile.recent.clone();
            history.push(turn.clone());
            let e = self.select_intervention(exercise, profile, &history, grading.as_ref(), seed)?;
            turn.intervention = Some(Intervention {
                id: format!("{}-{}", session.id, turn.sequence),
                kind: e.kind,
                tier: e.tier,
                content_id: e.content_id,
                text: e.text,
                score: e.score,
                gap: e.gap,
            });
        }
        turn.check()?;
        profile.record(&turn, &exercise.tags);
        session.state = next;
        session.next_sequence = turn.sequence + 1;
        Ok(turn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub records: Vec<LogRecord>,
    pub sessions: BTreeMap<String, SessionState>,
    pub profiles: BTreeMap<String, StudentProfile>,
}

/// Re-runs every logged event with its logged seed and checks that each
/// turn comes out identical (ratings aside).
pub fn replay(tutor: &Tutor, records: &[LogRecord]) -> Result<ReplayOutcome, TutorError> {
    let mut sessions: BTreeMap<String, Session> = BTreeMap::new();
    let mut profiles: BTreeMap<String, StudentProfile> = BTreeMap::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let session = sessions
            .entry(r.session_id.clone())
            .or_insert_with(|| Session::new(&r.session_id, &r.student_id, &r.turn.exercise_id, 0));
        let profile = profiles
            .entry(r.student_id.clone())
            .or_insert_with(|| StudentProfile::new(&r.student_id));
        session.next_sequence = r.turn.sequence;
        let mut turn = tutor.respond(session, profile, r.turn.event.clone(), r.seed)?;
        turn.helpful_rating = r.turn.helpful_rating;
        if turn != r.turn {
            return Err(TutorError::ReplayMismatch {
                session: r.session_id.clone(),
                sequence: r.turn.sequence,
            });
        }
        out.push(LogRecord { turn, ..r.clone() });
    }
    Ok(ReplayOutcome {
        records: out,
        sessions: sessions.into_iter().map(|(k, s)| (k, s.state)).collect(),
        profiles,
    })
}

/// Training data from a log: one example per intervention, with features at
/// `tier` as they were when it was shown, labelled by whether the next turn
/// on the same exercise was a correct attempt.
pub fn training_examples(
    tutor: &Tutor,
    records: &[LogRecord],
    tier: ModelTier,
) -> Result<Vec<TrainingExample>, TutorError> {
    let key = |r: &LogRecord| (r.student_id.clone(), r.session_id.clone(), r.turn.exercise_id.clone());
    let mut next_of = vec![None; records.len()];
    let mut last: BTreeMap<_, usize> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(prev) = last.insert(key(r), i) {
            next_of[prev] = Some(i);
        }
    }
    let mut profiles: BTreeMap<String, StudentProfile> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let profile = profiles
            .entry(r.student_id.clone())
            .or_insert_with(|| StudentProfile::new(&r.student_id));
        let exercise = tutor.exercise(&r.turn.exercise_id)?;
        if let Some(iv) = &r.turn.intervention {
            let mut history = profile.recent.clone();
            let mut bare = r.turn.clone();
            bare.intervention = None;
            bare.helpful_rating = None;
            history.push(bare);
            let v = extract_features(&iv.text, exercise, profile, &history, tier, tutor.resources());
            let label = next_of[i].is_some_and(|j| {
                let t = &records[j].turn;
                t.event.is_attempt() && t.grade == Some(Grade::Correct)
            });
            out.push(TrainingExample::new(v.values, label));
        }
        profile.record(&r.turn, &exercise.tags);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hints::default_cues;
    use crate::tutoring::{MathExpectation, SessionStatus};

    fn bank() -> Vec<Exercise> {
        vec![
            Exercise {
                id: "ml-1".into(),
                question: "What is the difference between overfitting and underfitting?".into(),
                expectations: vec![
                    "A model is underfitting when it has a high bias.".into(),
                    "A model is overfitting if it has a high variance.".into(),
                ],
                math: None,
                tags: vec!["ml".into()],
                difficulty: 0.4,
            },
            Exercise {
                id: "alg-1".into(),
                question: "Write the equation of a line.".into(),
                expectations: vec![],
                math: Some(MathExpectation {
                    latex: "y=mx+b".into(),
                    functions: vec![],
                }),
                tags: vec!["algebra".into()],
                difficulty: 0.3,
            },
        ]
    }

    fn tutor() -> Tutor {
        Tutor::new(bank(), &default_cues(), TutorConfig::default()).unwrap()
    }

    fn text(s: &str) -> Event {
        Event::Attempt {
            answer: Answer::Text(s.into()),
        }
    }

    #[test]
    fn incorrect_then_correct() {
        let t = tutor();
        let mut s = Session::new("s1", "u1", "ml-1", 7);
        let mut p = StudentProfile::new("u1");
        let seed = s.turn_seed();
        let first = t.respond(&mut s, &mut p, text("I have no idea"), seed).unwrap();
        assert_eq!(first.grade, Some(Grade::Incorrect));
        let iv = first.intervention.unwrap();
        assert!(iv.kind.is_implemented());
        assert!(iv.tier.is_some());
        assert_eq!(s.state.status, SessionStatus::InterventionShown);
        let seed = s.turn_seed();
        let second = t
            .respond(
                &mut s,
                &mut p,
                text("A model is underfitting when it has a high bias."),
                seed,
            )
            .unwrap();
        assert_eq!((second.grade, second.attempt_index), (Some(Grade::Correct), 2));
        assert_eq!(s.state.status, SessionStatus::Solved);
        let err = t.respond(&mut s, &mut p, text("again"), 0).unwrap_err();
        assert!(matches!(
            err,
            TutorError::IllegalTransition {
                state: SessionStatus::Solved,
                ..
            }
        ));
        assert_eq!((p.attempted, p.correct), (2, 1));
    }

    #[test]
    fn text_exercise_pool_has_no_math() {
        let t = tutor();
        let e = t.exercise("ml-1").unwrap();
        let pool = t.build_pool(e, &StudentProfile::new("u"), &[], None, 0).unwrap();
        assert_eq!(pool.len(), 3);
        assert!(pool.iter().all(|p| p.kind == InterventionType::TextHint));
    }

    #[test]
    fn math_exercise_gets_diff_hint() {
        let t = tutor();
        let mut s = Session::new("s2", "u1", "alg-1", 1);
        let mut p = StudentProfile::new("u1");
        let turn = t
            .respond(
                &mut s,
                &mut p,
                Event::Attempt {
                    answer: Answer::Latex("y=mx".into()),
                },
                3,
            )
            .unwrap();
        let iv = turn.intervention.unwrap();
        assert_eq!(iv.kind, InterventionType::MathDiffHint);
        assert!(iv.tier.is_none());
        let help = t.respond(&mut s, &mut p, Event::Help, 4).unwrap().intervention.unwrap();
        assert_eq!(help.kind, InterventionType::MathGapHint);
        let gap = help.gap.unwrap();
        let filled = gap.fill(&gap.answers).unwrap();
        let turn = t
            .respond(
                &mut s,
                &mut p,
                Event::Attempt {
                    answer: Answer::Latex(filled),
                },
                5,
            )
            .unwrap();
        assert_eq!(turn.grade, Some(Grade::Correct));
    }

    #[test]
    fn replay_reproduces_turns() {
        let t = tutor();
        let mut records = Vec::new();
        let mut p = StudentProfile::new("u1");
        for (sid, ex) in [("a", "ml-1"), ("b", "alg-1")] {
            let mut s = Session::new(sid, "u1", ex, 11);
            for ev in [text("nothing"), Event::Help, Event::Skip] {
                let seed = s.turn_seed();
                let turn = t.respond(&mut s, &mut p, ev, seed).unwrap();
                records.push(LogRecord {
                    student_id: "u1".into(),
                    session_id: sid.into(),
                    timestamp: "2024-01-01T00:00:00Z".into(),
                    seed,
                    turn,
                });
            }
        }
        let out = replay(&t, &records).unwrap();
        assert_eq!(out.records, records);
        assert!(out.sessions.values().all(|s| s.status == SessionStatus::Skipped));
        let mut tampered = records.clone();
        tampered[0].seed ^= 1;
        tampered[0].turn.intervention.as_mut().unwrap().text.push('!');
        assert!(matches!(replay(&t, &tampered), Err(TutorError::ReplayMismatch { .. })));
    }

    #[test]
    fn seeds_are_spread() {
        assert_ne!(derive_seed(1, 1), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
    }
}
