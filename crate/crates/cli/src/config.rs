use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tutorloop::hints::{default_cues, load_cues};
use tutorloop::models::ModelTier;
use tutorloop::storage::{load_exercises, load_model};
use tutorloop::tutoring::{Mode, Tutor, TutorConfig, DEFAULT_THRESHOLD, ZPD_WIDTH};
use tutorloop::wiki::{ingest_corpus, load_synonyms};

use crate::error::CliError;

/// Environment variable that overrides the `--config` path.
pub const CONFIG_ENV: &str = "TUTOR_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WikiConfig {
    pub corpus: PathBuf,
    /// Explanation quality model written by `ingest-wiki`.
    pub model: PathBuf,
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
}

/// Everything needed to build a [`Tutor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TutorSetup {
    pub bank: PathBuf,
    #[serde(default)]
    pub cues: Option<PathBuf>,
    #[serde(default)]
    pub models: BTreeMap<ModelTier, PathBuf>,
    #[serde(default)]
    pub wiki: Option<WikiConfig>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl TutorSetup {
    pub fn new(bank: impl Into<PathBuf>) -> Self {
        Self {
            bank: bank.into(),
            cues: None,
            models: BTreeMap::new(),
            wiki: None,
            mode: Mode::Experiment,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    fn paths(&self) -> Vec<&Path> {
        let mut out = vec![self.bank.as_path()];
        out.extend(self.cues.as_deref());
        out.extend(self.models.values().map(PathBuf::as_path));
        if let Some(w) = &self.wiki {
            out.push(&w.corpus);
            out.push(&w.model);
            out.extend(w.synonyms.as_deref());
        }
        out
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.bank);
        if let Some(p) = &mut self.cues {
            fix(p);
        }
        self.models.values_mut().for_each(fix);
        if let Some(w) = &mut self.wiki {
            fix(&mut w.corpus);
            fix(&mut w.model);
            if let Some(p) = &mut w.synonyms {
                fix(p);
            }
        }
    }

    pub fn load(&self) -> Result<Tutor, CliError> {
        let bank = load_exercises(&self.bank)?;
        let cues = match &self.cues {
            Some(p) => load_cues(File::open(p)?)?,
            None => default_cues(),
        };
        let config = TutorConfig {
            mode: self.mode,
            threshold: self.threshold,
            zpd_width: ZPD_WIDTH,
        };
        let mut tutor = Tutor::new(bank, &cues, config)?;
        for (tier, path) in &self.models {
            let model = load_model(path)?;
            if model.tier() != Some(*tier) {
                return Err(CliError::Config(format!("{} is not a {tier} model", path.display())));
            }
            tutor = tutor.with_model(model)?;
        }
        if let Some(w) = &self.wiki {
            let mut index = ingest_corpus(BufReader::new(File::open(&w.corpus)?))?;
            if let Some(s) = &w.synonyms {
                index = index.with_synonyms(load_synonyms(File::open(s)?)?);
            }
            tutor = tutor.with_wiki(&index, &load_model(&w.model)?)?;
        }
        Ok(tutor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    #[serde(flatten)]
    pub tutor: TutorSetup,
    /// Append-only interaction log; created when missing.
    pub log: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl ServiceConfig {
    /// Reads a JSON config. Relative paths are taken from the config file's
    /// directory; every input file and the log's directory must exist.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: ServiceConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.tutor.resolve(base);
        if config.log.is_relative() {
            config.log = base.join(&config.log);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for p in self.tutor.paths() {
            if !p.is_file() {
                return Err(CliError::Config(format!("missing file {}", p.display())));
            }
        }
        let dir = self
            .log
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return Err(CliError::Config(format!("missing log directory {}", dir.display())));
        }
        Ok(())
    }
}

/// `TUTOR_CONFIG` when set, else `flag`.
pub fn config_path(flag: Option<&Path>) -> Result<PathBuf, CliError> {
    match std::env::var_os(CONFIG_ENV) {
        Some(p) if !p.is_empty() => Ok(PathBuf::from(p)),
        _ => flag
            .map(Path::to_path_buf)
            .ok_or_else(|| CliError::Usage(format!("serve needs --config or {CONFIG_ENV}"))),
    }
}
