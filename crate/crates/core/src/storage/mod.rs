//! JSONL exercise banks, the append-only interaction log, model files and
//! training data.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{FeatureSchema, ModelError, TrainedModel, TrainingExample};
use crate::tutoring::{Exercise, InteractionTurn};

pub const EXERCISE_SCHEMA: &str = "exercises/1";
pub const LOG_SCHEMA: &str = "interactions/1";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: expected schema header {expected:?}, found {found:?}")]
    SchemaHeader {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: duplicate exercise id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("line {line}: sequence {sequence} of session {session:?} does not follow {previous}")]
    NonMonotonic {
        line: usize,
        session: String,
        sequence: u64,
        previous: u64,
    },
    #[error("line {line}: rating for unknown intervention {id:?}")]
    UnknownIntervention { line: usize, id: String },
    #[error("line {line}: feature {name:?} missing")]
    MissingFeature { line: usize, name: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> StorageError {
    StorageError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn json_err(line: usize, e: impl std::fmt::Display) -> StorageError {
    StorageError::Json {
        line,
        message: e.to_string(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, StorageError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

fn check_header(line: usize, text: Option<&str>, expected: &'static str) -> Result<(), StorageError> {
    let found = text
        .and_then(|t| serde_json::from_str::<Header>(t).ok())
        .map(|h| h.schema)
        .unwrap_or_else(|| text.unwrap_or("").to_string());
    if found != expected {
        return Err(StorageError::SchemaHeader { line, expected, found });
    }
    Ok(())
}

/// Numbered non-blank lines.
fn lines<R: BufRead>(reader: R, path: &Path) -> Result<Vec<(usize, String)>, StorageError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_exercises<R: BufRead>(reader: R) -> Result<Vec<Exercise>, StorageError> {
    let lines = lines(reader, Path::new("<exercises>"))?;
    let mut it = lines.into_iter();
    let first = it.next();
    check_header(
        first.as_ref().map_or(1, |l| l.0),
        first.as_ref().map(|l| l.1.as_str()),
        EXERCISE_SCHEMA,
    )?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, text) in it {
        let ex: Exercise = serde_json::from_str(&text).map_err(|e| json_err(line, e))?;
        ex.validate().map_err(|e| StorageError::InvalidRecord {
            line,
            reason: e.to_string(),
        })?;
        if !seen.insert(ex.id.clone()) {
            return Err(StorageError::DuplicateId { line, id: ex.id });
        }
        out.push(ex);
    }
    Ok(out)
}

pub fn load_exercises(path: impl AsRef<Path>) -> Result<Vec<Exercise>, StorageError> {
    let path = path.as_ref();
    read_exercises(open(path)?).map_err(|e| match e {
        StorageError::Io { message, .. } => io_err(path, message),
        other => other,
    })
}

pub fn write_exercises<W: Write>(mut w: W, bank: &[Exercise]) -> std::io::Result<()> {
    serde_json::to_writer(
        &mut w,
        &Header {
            schema: EXERCISE_SCHEMA.into(),
        },
    )?;
    w.write_all(b"\n")?;
    for ex in bank {
        serde_json::to_writer(&mut w, ex)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_exercises(path: impl AsRef<Path>, bank: &[Exercise]) -> Result<(), StorageError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_exercises(BufWriter::new(f), bank).map_err(|e| io_err(path, e))
}

/// One logged turn with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub student_id: String,
    pub session_id: String,
    /// ISO-8601 UTC.
    pub timestamp: String,
    /// Seed the turn's intervention choice was drawn with.
    pub seed: u64,
    pub turn: InteractionTurn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub student_id: String,
    pub session_id: String,
    pub intervention_id: String,
    pub helpful: bool,
    pub timestamp: String,
}

/// Opening of a session, with the seed its turn seeds derive from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub student_id: String,
    pub session_id: String,
    pub exercise_id: String,
    pub seed: u64,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LogLine {
    Session(SessionRecord),
    Turn(LogRecord),
    Rating(RatingRecord),
}

/// Append-only JSONL log. Each line is written and flushed whole under a
/// mutex, so concurrent appenders never interleave partial lines.
#[derive(Debug)]
pub struct InteractionLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl InteractionLog {
    /// Opens for appending, writing the schema header to a new or empty file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StorageError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let len = file.metadata().map_err(|e| io_err(&path, e))?.len();
        if len == 0 {
            let header = serde_json::to_string(&Header {
                schema: LOG_SCHEMA.into(),
            })
            .expect("header serializes");
            file.write_all(format!("{header}\n").as_bytes())
                .map_err(|e| io_err(&path, e))?;
        }
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, line: &LogLine) -> Result<(), StorageError> {
        let mut text = serde_json::to_string(line).expect("log lines serialize");
        text.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(text.as_bytes()).map_err(|e| io_err(&self.path, e))?;
        f.flush().map_err(|e| io_err(&self.path, e))
    }

    pub fn append_turn(&self, record: &LogRecord) -> Result<(), StorageError> {
        self.append(&LogLine::Turn(record.clone()))
    }

    pub fn append_rating(&self, rating: &RatingRecord) -> Result<(), StorageError> {
        self.append(&LogLine::Rating(rating.clone()))
    }
}

/// Serializes a whole log in memory, header first.
pub fn write_log<W: Write>(mut w: W, lines: &[LogLine]) -> std::io::Result<()> {
    serde_json::to_writer(
        &mut w,
        &Header {
            schema: LOG_SCHEMA.into(),
        },
    )?;
    w.write_all(b"\n")?;
    for l in lines {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Raw log lines after the header.
pub fn read_log_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, LogLine)>, StorageError> {
    let lines = lines(reader, Path::new("<log>"))?;
    let mut it = lines.into_iter();
    let first = it.next();
    check_header(
        first.as_ref().map_or(1, |l| l.0),
        first.as_ref().map(|l| l.1.as_str()),
        LOG_SCHEMA,
    )?;
    it.map(|(n, text)| serde_json::from_str(&text).map(|l| (n, l)).map_err(|e| json_err(n, e)))
        .collect()
}

/// Turn records in log order with ratings folded into their turns. Checks
/// that sequences rise strictly within each (student, session).
pub fn read_log<R: BufRead>(reader: R) -> Result<Vec<LogRecord>, StorageError> {
    fold_log(read_log_lines(reader)?)
}

/// The folding and checks of [`read_log`] over already parsed lines, each
/// paired with its line number.
pub fn fold_log(lines: impl IntoIterator<Item = (usize, LogLine)>) -> Result<Vec<LogRecord>, StorageError> {
    let mut out: Vec<LogRecord> = Vec::new();
    let mut last: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut by_intervention: BTreeMap<String, usize> = BTreeMap::new();
    for (line, l) in lines {
        match l {
            LogLine::Turn(r) => {
                r.turn.check().map_err(|e| StorageError::InvalidRecord {
                    line,
                    reason: e.to_string(),
                })?;
                let key = (r.student_id.clone(), r.session_id.clone());
                if let Some(&prev) = last.get(&key) {
                    if r.turn.sequence <= prev {
                        return Err(StorageError::NonMonotonic {
                            line,
                            session: r.session_id,
                            sequence: r.turn.sequence,
                            previous: prev,
                        });
                    }
                }
                last.insert(key, r.turn.sequence);
                if let Some(iv) = &r.turn.intervention {
                    by_intervention.insert(iv.id.clone(), out.len());
                }
                out.push(r);
            }
            LogLine::Session(_) => {}
            LogLine::Rating(rating) => {
                let &i =
                    by_intervention
                        .get(&rating.intervention_id)
                        .ok_or_else(|| StorageError::UnknownIntervention {
                            line,
                            id: rating.intervention_id.clone(),
                        })?;
                out[i].turn.helpful_rating = Some(rating.helpful);
            }
        }
    }
    Ok(out)
}

pub fn load_log(path: impl AsRef<Path>) -> Result<Vec<LogRecord>, StorageError> {
    read_log(open(path.as_ref())?)
}

pub fn save_model(path: impl AsRef<Path>, model: &TrainedModel) -> Result<(), StorageError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(model).expect("models serialize");
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Reads a model file and checks its schema hash.
pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, StorageError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let model: TrainedModel = serde_json::from_str(&text).map_err(|e| json_err(e.line(), e))?;
    model.verify()?;
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct TrainingLine {
    features: BTreeMap<String, f64>,
    label: u8,
}

pub fn write_training<W: Write>(mut w: W, schema: &FeatureSchema, examples: &[TrainingExample]) -> std::io::Result<()> {
    for e in examples {
        let line = TrainingLine {
            features: schema.names.iter().cloned().zip(e.features.iter().copied()).collect(),
            label: e.label,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads `{features: {name: value}, label}` lines, ordering features by
/// `schema`. Extra names are ignored.
pub fn read_training<R: BufRead>(reader: R, schema: &FeatureSchema) -> Result<Vec<TrainingExample>, StorageError> {
    let mut out = Vec::new();
    for (line, text) in lines(reader, Path::new("<training>"))? {
        let l: TrainingLine = serde_json::from_str(&text).map_err(|e| json_err(line, e))?;
        if l.label > 1 {
            return Err(StorageError::InvalidRecord {
                line,
                reason: format!("label {} is not 0 or 1", l.label),
            });
        }
        let features = schema
            .names
            .iter()
            .map(|n| {
                l.features
                    .get(n)
                    .copied()
                    .ok_or_else(|| StorageError::MissingFeature { line, name: n.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(TrainingExample {
            features,
            label: l.label,
        });
    }
    Ok(out)
}

pub fn save_training(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    examples: &[TrainingExample],
) -> Result<(), StorageError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_training(BufWriter::new(f), schema, examples).map_err(|e| io_err(path, e))
}

pub fn load_training(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Vec<TrainingExample>, StorageError> {
    read_training(open(path.as_ref())?, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelTier;
    use crate::tutoring::{Answer, Event, Grade};

    fn exercise(id: &str) -> Exercise {
        Exercise {
            id: id.into(),
            question: "What is bias?".into(),
            expectations: vec!["Bias is systematic error.".into()],
            math: None,
            tags: vec!["ml".into()],
            difficulty: 0.3,
        }
    }

    fn record(session: &str, seq: u64) -> LogRecord {
        LogRecord {
            student_id: "s1".into(),
            session_id: session.into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
            seed: 3,
            turn: InteractionTurn {
                sequence: seq,
                exercise_id: "e1".into(),
                attempt_index: 1,
                event: Event::Attempt {
                    answer: Answer::Text("a".into()),
                },
                grade: Some(Grade::Correct),
                score: Some(0.9),
                intervention: None,
                helpful_rating: None,
            },
        }
    }

    #[test]
    fn bank_round_trip() {
        let bank = vec![exercise("a"), exercise("b"), exercise("c")];
        let mut buf = Vec::new();
        write_exercises(&mut buf, &bank).unwrap();
        assert_eq!(read_exercises(buf.as_slice()).unwrap(), bank);
    }

    #[test]
    fn bank_errors() {
        let no_header = serde_json::to_string(&exercise("a")).unwrap();
        assert!(matches!(
            read_exercises(no_header.as_bytes()),
            Err(StorageError::SchemaHeader { line: 1, .. })
        ));
        let mut buf = Vec::new();
        write_exercises(&mut buf, &[exercise("a"), exercise("a")]).unwrap();
        assert!(matches!(
            read_exercises(buf.as_slice()),
            Err(StorageError::DuplicateId { line: 3, .. })
        ));
    }

    #[test]
    fn out_of_order_sequence() {
        let mut buf = Vec::new();
        let lines = [
            LogLine::Turn(record("x", 1)),
            LogLine::Turn(record("y", 1)),
            LogLine::Turn(record("x", 3)),
            LogLine::Turn(record("x", 2)),
        ];
        write_log(&mut buf, &lines).unwrap();
        match read_log(buf.as_slice()) {
            Err(StorageError::NonMonotonic {
                line,
                sequence,
                previous,
                ..
            }) => {
                assert_eq!((line, sequence, previous), (5, 2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn concurrent_appends_are_whole_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let log = std::sync::Arc::new(InteractionLog::open(&path).unwrap());
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let log = log.clone();
                std::thread::spawn(move || {
                    for seq in 1..=50 {
                        log.append_turn(&record(&format!("s{t}"), seq)).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let records = load_log(&path).unwrap();
        assert_eq!(records.len(), 200);
    }

    #[test]
    fn training_round_trip() {
        let schema = FeatureSchema::for_tier(ModelTier::Baseline);
        let ex = vec![TrainingExample::new(vec![1.0, 2.0, 0.5, 0.0, -3.0, 0.25], true)];
        let mut buf = Vec::new();
        write_training(&mut buf, &schema, &ex).unwrap();
        assert_eq!(read_training(buf.as_slice(), &schema).unwrap(), ex);
        let text = String::from_utf8(buf).unwrap().replace("lm_score", "lm");
        assert!(matches!(
            read_training(text.as_bytes(), &schema),
            Err(StorageError::MissingFeature { line: 1, .. })
        ));
    }
}
