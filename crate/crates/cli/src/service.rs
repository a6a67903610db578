//! HTTP front end of the tutor.
//!
//! Sessions live in memory. Every turn is appended to the interaction log
//! before the in-memory state changes, so reopening the log replays to the
//! same sessions and profiles. Requests on one session are serialized by a
//! per-session lock; different sessions run concurrently.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path as UrlPath, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tutorloop::analytics::{AttemptFilter, LearningGainReport};
use tutorloop::storage::{
    load_log, read_log_lines, InteractionLog, LogLine, LogRecord, RatingRecord, SessionRecord, StorageError,
};
use tutorloop::tutoring::{
    derive_seed, Answer, Event, Exercise, Grade, InteractionTurn, Intervention, Session, SessionStatus, StudentProfile,
    Tutor, TutorError,
};

use crate::error::CliError;

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict { state: SessionStatus, event: String },
    AlreadyRated(String),
    Schema(String),
    Internal(String),
}

impl From<TutorError> for ApiError {
    fn from(e: TutorError) -> Self {
        match e {
            TutorError::IllegalTransition { state, event } => ApiError::Conflict { state, event },
            TutorError::UnknownExercise(id) => ApiError::Schema(format!("unknown exercise {id:?}")),
            TutorError::EmptyAttempt => ApiError::Schema("empty attempt".into()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(what) => (StatusCode::NOT_FOUND, json!({"error": "not_found", "message": what})),
            ApiError::Conflict { state, event } => (
                StatusCode::CONFLICT,
                json!({
                    "error": "illegal_transition",
                    "state": state,
                    "event": event,
                    "message": format!("illegal transition: {event} in state {state}"),
                }),
            ),
            ApiError::AlreadyRated(id) => (
                StatusCode::CONFLICT,
                json!({"error": "already_rated", "message": format!("intervention {id} is already rated")}),
            ),
            ApiError::Schema(m) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": "invalid_body", "message": m}),
            ),
            ApiError::Internal(m) => (
                StatusCode::INTERNAL_SERVER_ERROR,
                json!({"error": "internal", "message": m}),
            ),
        };
        (status, Json(body)).into_response()
    }
}

/// JSON body whose every rejection is a 422.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::Schema(rejection_text(&e))),
        }
    }
}

fn rejection_text(e: &JsonRejection) -> String {
    e.body_text()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    pub student_id: String,
    #[serde(default)]
    pub exercise_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptBody {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub latex: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingBody {
    pub helpful: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GainQuery {
    pub filter: Option<String>,
}

/// What the student sees of an exercise: no expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseView {
    pub id: String,
    pub question: String,
    pub math: bool,
    pub tags: Vec<String>,
    pub difficulty: f64,
}

impl From<&Exercise> for ExerciseView {
    fn from(e: &Exercise) -> Self {
        Self {
            id: e.id.clone(),
            question: e.question.clone(),
            math: e.math.is_some(),
            tags: e.tags.clone(),
            difficulty: e.difficulty,
        }
    }
}

#[derive(Debug, Clone)]
struct RatingSlot {
    student_id: String,
    session_id: String,
    rated: bool,
}

#[derive(Debug, Default)]
struct Registry {
    sessions: BTreeMap<String, Arc<tokio::sync::Mutex<Session>>>,
    profiles: BTreeMap<String, Arc<Mutex<StudentProfile>>>,
    opened: BTreeMap<String, usize>,
    interventions: BTreeMap<String, RatingSlot>,
}

impl Registry {
    fn profile(&mut self, student: &str) -> Arc<Mutex<StudentProfile>> {
        self.profiles
            .entry(student.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(StudentProfile::new(student))))
            .clone()
    }
}

pub struct AppState {
    tutor: Arc<Tutor>,
    log: InteractionLog,
    seed: u64,
    registry: Mutex<Registry>,
}

/// Final state of every session, for comparing a live service with a
/// restarted one.
pub type Snapshot = BTreeMap<String, Session>;

impl AppState {
    /// Opens (or creates) the log and replays what it holds.
    pub fn open(tutor: Arc<Tutor>, log_path: &Path, seed: u64) -> Result<Self, CliError> {
        let mut registry = Registry::default();
        let existing = std::fs::metadata(log_path).map(|m| m.len() > 0).unwrap_or(false);
        if existing {
            let file = std::io::BufReader::new(std::fs::File::open(log_path)?);
            for (_, line) in read_log_lines(file)? {
                restore_line(&tutor, &mut registry, line)?;
            }
        }
        let log = InteractionLog::open(log_path)?;
        Ok(Self {
            tutor,
            log,
            seed,
            registry: Mutex::new(registry),
        })
    }

    pub fn tutor(&self) -> &Tutor {
        &self.tutor
    }

    pub async fn snapshot(&self) -> Snapshot {
        let sessions: Vec<_> = {
            let reg = self.registry.lock().expect("registry lock");
            reg.sessions.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
        };
        let mut out = BTreeMap::new();
        for (k, s) in sessions {
            out.insert(k, s.lock().await.clone());
        }
        out
    }

    pub fn profiles(&self) -> BTreeMap<String, StudentProfile> {
        let slots: Vec<_> = {
            let reg = self.registry.lock().expect("registry lock");
            reg.profiles.iter().map(|(k, p)| (k.clone(), p.clone())).collect()
        };
        slots
            .into_iter()
            .map(|(k, p)| (k, p.lock().expect("profile lock").clone()))
            .collect()
    }

    fn open_session(&self, body: NewSession) -> Result<(Session, &Exercise), ApiError> {
        if body.student_id.trim().is_empty() {
            return Err(ApiError::Schema("empty student_id".into()));
        }
        let mut reg = self.registry.lock().expect("registry lock");
        let exercise = match &body.exercise_id {
            Some(id) => self.tutor.exercise(id)?,
            None => {
                let bank = self.tutor.exercises();
                let k = reg.opened.get(&body.student_id).copied().unwrap_or(0);
                &bank[k % bank.len()]
            }
        };
        let n = reg.sessions.len() as u64;
        let id = format!("s-{:06}", n + 1);
        let session = Session::new(&id, &body.student_id, &exercise.id, derive_seed(self.seed, n));
        self.log.append(&LogLine::Session(SessionRecord {
            student_id: body.student_id.clone(),
            session_id: id.clone(),
            exercise_id: exercise.id.clone(),
            seed: session.seed,
            timestamp: now(),
        }))?;
        *reg.opened.entry(body.student_id.clone()).or_default() += 1;
        reg.profile(&body.student_id);
        reg.sessions
            .insert(id, Arc::new(tokio::sync::Mutex::new(session.clone())));
        Ok((session, exercise))
    }

    /// Runs one event on a session: log first, then commit.
    async fn handle(&self, session_id: &str, event: Event) -> Result<(Session, InteractionTurn), ApiError> {
        let slot = {
            let reg = self.registry.lock().expect("registry lock");
            reg.sessions.get(session_id).cloned()
        }
        .ok_or_else(|| ApiError::NotFound(format!("session {session_id}")))?;
        let mut session = slot.lock().await;
        let profile_slot = self
            .registry
            .lock()
            .expect("registry lock")
            .profile(&session.student_id);
        let mut profile = profile_slot.lock().expect("profile lock");
        let mut next_session = session.clone();
        let mut next_profile = profile.clone();
        let seed = next_session.turn_seed();
        let turn = self.tutor.respond(&mut next_session, &mut next_profile, event, seed)?;
        self.log.append_turn(&LogRecord {
            student_id: session.student_id.clone(),
            session_id: session.id.clone(),
            timestamp: now(),
            seed,
            turn: turn.clone(),
        })?;
        if let Some(iv) = &turn.intervention {
            self.registry.lock().expect("registry lock").interventions.insert(
                iv.id.clone(),
                RatingSlot {
                    student_id: session.student_id.clone(),
                    session_id: session.id.clone(),
                    rated: false,
                },
            );
        }
        *session = next_session;
        *profile = next_profile;
        Ok((session.clone(), turn))
    }

    fn rate(&self, intervention_id: &str, helpful: bool) -> Result<(), ApiError> {
        let mut reg = self.registry.lock().expect("registry lock");
        let slot = reg
            .interventions
            .get(intervention_id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("intervention {intervention_id}")))?;
        if slot.rated {
            return Err(ApiError::AlreadyRated(intervention_id.to_string()));
        }
        self.log.append_rating(&RatingRecord {
            student_id: slot.student_id,
            session_id: slot.session_id,
            intervention_id: intervention_id.to_string(),
            helpful,
            timestamp: now(),
        })?;
        reg.interventions.get_mut(intervention_id).expect("checked above").rated = true;
        Ok(())
    }

    fn report(&self, filter: Option<AttemptFilter>) -> Result<LearningGainReport, ApiError> {
        let records = load_log(self.log.path())?;
        let mut report = LearningGainReport::from_log(&records);
        if let Some(f) = filter {
            for row in &mut report.rows {
                match f {
                    AttemptFilter::AllAttempts => row.before_second_attempt = None,
                    AttemptFilter::BeforeSecondAttempt => row.all_attempts = None,
                }
            }
            report.tests.retain(|t| t.filter == f);
        }
        Ok(report)
    }
}

fn restore_line(tutor: &Tutor, reg: &mut Registry, line: LogLine) -> Result<(), CliError> {
    match line {
        LogLine::Session(s) => {
            tutor.exercise(&s.exercise_id)?;
            let session = Session::new(&s.session_id, &s.student_id, &s.exercise_id, s.seed);
            *reg.opened.entry(s.student_id.clone()).or_default() += 1;
            reg.profile(&s.student_id);
            reg.sessions
                .insert(s.session_id, Arc::new(tokio::sync::Mutex::new(session)));
        }
        LogLine::Turn(r) => {
            let mismatch = || TutorError::ReplayMismatch {
                session: r.session_id.clone(),
                sequence: r.turn.sequence,
            };
            let slot = reg.sessions.get(&r.session_id).cloned().ok_or_else(mismatch)?;
            let mut session = slot.try_lock().expect("restore is single threaded");
            let profile = reg.profile(&r.student_id);
            let mut profile = profile.lock().expect("profile lock");
            let turn = tutor.respond(&mut session, &mut profile, r.turn.event.clone(), r.seed)?;
            if turn != r.turn {
                return Err(mismatch().into());
            }
            if let Some(iv) = &turn.intervention {
                reg.interventions.insert(
                    iv.id.clone(),
                    RatingSlot {
                        student_id: r.student_id.clone(),
                        session_id: r.session_id.clone(),
                        rated: false,
                    },
                );
            }
        }
        LogLine::Rating(r) => {
            if let Some(slot) = reg.interventions.get_mut(&r.intervention_id) {
                slot.rated = true;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnResponse {
    pub session_id: String,
    pub state: SessionStatus,
    pub attempt_index: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grade: Option<Grade>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervention: Option<Intervention>,
}

impl TurnResponse {
    fn new(session: &Session, turn: InteractionTurn) -> Self {
        Self {
            session_id: session.id.clone(),
            state: session.state.status,
            attempt_index: session.state.attempt_index,
            grade: turn.grade,
            score: turn.score,
            intervention: turn.intervention,
        }
    }
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Body(body): Body<NewSession>,
) -> Result<Json<Value>, ApiError> {
    let (session, exercise) = app.open_session(body)?;
    Ok(Json(json!({
        "session_id": session.id,
        "state": session.state.status,
        "exercise": ExerciseView::from(exercise),
    })))
}

async fn attempt(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Body(body): Body<AttemptBody>,
) -> Result<Json<TurnResponse>, ApiError> {
    let answer = match (body.text, body.latex) {
        (Some(t), None) => Answer::Text(t),
        (None, Some(l)) => Answer::Latex(l),
        _ => return Err(ApiError::Schema("give exactly one of text and latex".into())),
    };
    let (session, turn) = app.handle(&id, Event::Attempt { answer }).await?;
    Ok(Json(TurnResponse::new(&session, turn)))
}

async fn help(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<TurnResponse>, ApiError> {
    let (session, turn) = app.handle(&id, Event::Help).await?;
    Ok(Json(TurnResponse::new(&session, turn)))
}

async fn skip(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<TurnResponse>, ApiError> {
    let (session, turn) = app.handle(&id, Event::Skip).await?;
    Ok(Json(TurnResponse::new(&session, turn)))
}

async fn rating(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Body(body): Body<RatingBody>,
) -> Result<Json<Value>, ApiError> {
    app.rate(&id, body.helpful)?;
    Ok(Json(json!({})))
}

async fn learning_gains(
    State(app): State<Arc<AppState>>,
    Query(q): Query<GainQuery>,
) -> Result<Json<LearningGainReport>, ApiError> {
    let filter = match q.filter.as_deref() {
        None | Some("") => None,
        Some(f) => Some(f.parse::<AttemptFilter>().map_err(ApiError::Schema)?),
    };
    Ok(Json(app.report(filter)?))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/attempts", post(attempt))
        .route("/sessions/{id}/help", post(help))
        .route("/sessions/{id}/skip", post(skip))
        .route("/interventions/{id}/rating", post(rating))
        .route("/analytics/learning-gains", get(learning_gains))
        .with_state(app)
}

/// Binds and serves until the process is stopped.
pub async fn serve(app: Arc<AppState>, addr: std::net::SocketAddr) -> Result<(), CliError> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app)).await?;
    Ok(())
}
