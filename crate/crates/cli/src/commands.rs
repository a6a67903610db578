use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tutorloop::analytics::LearningGainReport;
use tutorloop::math::{check_equivalence, interpret, lex_latex, EquivalenceVerdict, ParseContext};
use tutorloop::models::{
    cross_validate, data_hash, smote_oversample, train_decision_tree, train_random_forest, Classifier, CvReport,
    FeatureSchema, ForestParams, ForestTrainer, ModelTier, TrainedModel, TrainingExample, TrainingMetadata, TreeParams,
    TreeTrainer,
};
use tutorloop::simulate::{simulate, synthetic_tier_examples, CohortSpec};
use tutorloop::storage::{load_log, load_model, load_training, save_model, write_log};
use tutorloop::tutoring::{training_examples, Answer};
use tutorloop::wiki::{explanation_schema, ingest_corpus, load_synonyms, training_set};

use crate::config::{config_path, ServiceConfig, TutorSetup};
use crate::error::CliError;
use crate::service::{serve, AppState};

const DEFAULT_BANK: &str = "data/bank.jsonl";

#[derive(Debug, Parser)]
#[command(
    name = "tutorloop",
    version,
    about = "Inner-loop feedback engine for dialogue-based tutoring"
)]
pub struct Cli {
    /// Print JSON on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierKind {
    Forest,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CohortKind {
    /// Hints make no difference.
    Null,
    /// Hints help more the richer their tier.
    Responsive,
}

/// Where training examples come from; give exactly one.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training file written by `train --export`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Interaction log to label interventions from (needs `--bank`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Synthetic set of this many examples.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value = DEFAULT_BANK)]
    pub bank: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ClassifierKind::Forest)]
    pub classifier: ClassifierKind,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 2)]
    pub min_samples_leaf: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Index an encyclopedia corpus and train the explanation quality model.
    IngestWiki {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        /// Where to write the explanation model.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a hint ranking model for one tier.
    Train {
        #[arg(long)]
        tier: ModelTier,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Oversample the minority class to this minority:majority ratio.
        #[arg(long)]
        smote: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// k-fold cross-validation of a tier's classifier.
    Cv {
        #[arg(long, default_value_t = 50)]
        folds: usize,
        #[arg(long, default_value = "deep")]
        tier: ModelTier,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the generated hints of an exercise.
    Hint {
        #[arg(long)]
        exercise_id: String,
        #[arg(long, default_value = DEFAULT_BANK)]
        bank: PathBuf,
        #[arg(long)]
        cues: Option<PathBuf>,
    },
    /// Equation tools.
    Math {
        #[command(subcommand)]
        command: MathCommand,
    },
    /// Grade one answer.
    Grade {
        #[arg(long)]
        exercise_id: String,
        #[arg(long)]
        answer: String,
        /// Treat the answer as LaTeX.
        #[arg(long)]
        latex: bool,
        #[arg(long, default_value = DEFAULT_BANK)]
        bank: PathBuf,
    },
    /// Run simulated students through the bank and write their log.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        students: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = CohortKind::Responsive)]
        cohort: CohortKind,
        #[arg(long, default_value = DEFAULT_BANK)]
        bank: PathBuf,
        /// Ranking model files; the tier is read from each.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Log destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning gains per tier from an interaction log.
    Report {
        #[arg(long)]
        log: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        /// Service config; `TUTOR_CONFIG` takes precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MathCommand {
    /// Decide whether an attempt is equivalent to the expected equation.
    Check {
        #[arg(long, allow_hyphen_values = true)]
        attempt: String,
        #[arg(long, allow_hyphen_values = true)]
        expected: String,
        /// Names the expectation declares as functions.
        #[arg(long, value_delimiter = ',')]
        functions: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Result of a command in both renderings.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub json: Value,
}

impl Output {
    fn new(text: impl Into<String>, json: Value) -> Self {
        Self {
            text: text.into(),
            json,
        }
    }
}

fn trained_at() -> String {
    // honour reproducible-build timestamps
    match std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
    {
        Some(secs) => chrono::DateTime::from_timestamp(secs, 0)
            .unwrap_or_default()
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        None => chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    }
}

fn load_examples(tier: ModelTier, data: &DataArgs, seed: u64) -> Result<Vec<TrainingExample>, CliError> {
    let schema = FeatureSchema::for_tier(tier);
    match (&data.data, &data.log, data.synthetic) {
        (Some(path), None, None) => Ok(load_training(path, &schema)?),
        (None, Some(log), None) => {
            let tutor = TutorSetup::new(&data.bank).load()?;
            Ok(training_examples(&tutor, &load_log(log)?, tier)?)
        }
        (None, None, Some(n)) => Ok(synthetic_tier_examples(tier, n, seed)),
        _ => Err(CliError::Usage(
            "give exactly one of --data, --log and --synthetic".into(),
        )),
    }
}

fn fit(examples: &[TrainingExample], model: &ModelArgs, seed: u64) -> Result<Classifier, CliError> {
    Ok(match model.classifier {
        ClassifierKind::Forest => Classifier::Forest(train_random_forest(examples, &forest_params(model), seed)?),
        ClassifierKind::Tree => Classifier::Tree(train_decision_tree(examples, &tree_params(model), seed)?),
    })
}

fn forest_params(m: &ModelArgs) -> ForestParams {
    ForestParams {
        n_trees: m.trees,
        max_depth: m.max_depth,
        min_samples_leaf: m.min_samples_leaf,
        features_per_split: None,
    }
}

fn tree_params(m: &ModelArgs) -> TreeParams {
    TreeParams {
        max_depth: m.max_depth,
        min_samples_leaf: m.min_samples_leaf,
        max_features: None,
    }
}

fn model_file(
    path: &Path,
    schema: FeatureSchema,
    classifier: Classifier,
    examples: &[TrainingExample],
    seed: u64,
) -> Result<TrainedModel, CliError> {
    let meta = TrainingMetadata {
        seed,
        data_hash: data_hash(examples),
        trained_at: trained_at(),
        n_examples: examples.len(),
    };
    let model = TrainedModel::new(schema, classifier, meta)?;
    save_model(path, &model)?;
    Ok(model)
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn cv_text(r: &CvReport) -> String {
    let sizes: Vec<usize> = r.folds.iter().map(|f| f.size).collect();
    let (lo, hi) = (sizes.iter().min().unwrap_or(&0), sizes.iter().max().unwrap_or(&0));
    format!(
        "{} folds of {}..={} examples\naccuracy {} [{}, {}]\nf1       {} [{}, {}]",
        r.k_folds,
        lo,
        hi,
        pct(r.accuracy.mean),
        pct(r.accuracy.lower),
        pct(r.accuracy.upper),
        pct(r.f1.mean),
        pct(r.f1.lower),
        pct(r.f1.upper)
    )
}

pub fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::IngestWiki {
            corpus,
            synonyms,
            out,
            seed,
        } => {
            let mut index = ingest_corpus(BufReader::new(File::open(&corpus)?))?;
            if let Some(s) = synonyms {
                index = index.with_synonyms(load_synonyms(File::open(s)?)?);
            }
            let examples = training_set(&index);
            let tree = train_decision_tree(&examples, &TreeParams::default(), seed)?;
            model_file(&out, explanation_schema(), Classifier::Tree(tree), &examples, seed)?;
            let keys = index.keywords.len();
            Ok(Output::new(
                format!(
                    "{} articles ({} skipped), {} index keys, {} training examples\nmodel written to {}",
                    index.articles.len(),
                    index.warnings,
                    keys,
                    examples.len(),
                    out.display()
                ),
                json!({
                    "articles": index.articles.len(),
                    "skipped": index.warnings,
                    "keys": keys,
                    "examples": examples.len(),
                    "out": out,
                }),
            ))
        }
        Command::Train {
            tier,
            data,
            model,
            smote,
            seed,
            out,
        } => {
            let mut examples = load_examples(tier, &data, seed)?;
            if let Some(ratio) = smote {
                examples = smote_oversample(&examples, 5, ratio, seed)?;
            }
            let classifier = fit(&examples, &model, seed)?;
            let oob = match &classifier {
                Classifier::Forest(f) => f.oob_accuracy,
                Classifier::Tree(_) => None,
            };
            let m = model_file(&out, FeatureSchema::for_tier(tier), classifier, &examples, seed)?;
            let positives = examples.iter().filter(|e| e.label == 1).count();
            Ok(Output::new(
                format!(
                    "{tier} model on {} examples ({positives} positive){}\nwritten to {}",
                    examples.len(),
                    oob.map(|a| format!(", out-of-bag accuracy {}", pct(a)))
                        .unwrap_or_default(),
                    out.display()
                ),
                json!({
                    "tier": tier,
                    "examples": examples.len(),
                    "positives": positives,
                    "oob_accuracy": oob,
                    "schema_hash": m.schema_hash,
                    "data_hash": m.metadata.data_hash,
                    "out": out,
                }),
            ))
        }
        Command::Cv {
            folds,
            tier,
            data,
            model,
            seed,
        } => {
            let examples = load_examples(tier, &data, seed)?;
            let report = match model.classifier {
                ClassifierKind::Forest => cross_validate(
                    &examples,
                    folds,
                    &ForestTrainer {
                        params: forest_params(&model),
                    },
                    seed,
                )?,
                ClassifierKind::Tree => cross_validate(
                    &examples,
                    folds,
                    &TreeTrainer {
                        params: tree_params(&model),
                    },
                    seed,
                )?,
            };
            let json = serde_json::to_value(&report).expect("reports serialize");
            Ok(Output::new(cv_text(&report), json))
        }
        Command::Hint {
            exercise_id,
            bank,
            cues,
        } => {
            let setup = TutorSetup {
                cues,
                ..TutorSetup::new(bank)
            };
            let tutor = setup.load()?;
            tutor.exercise(&exercise_id)?;
            let hints = tutor.hints(&exercise_id);
            let text = hints.iter().map(|h| h.text.as_str()).collect::<Vec<_>>().join("\n");
            Ok(Output::new(text, serde_json::to_value(hints).expect("hints serialize")))
        }
        Command::Math {
            command:
                MathCommand::Check {
                    attempt,
                    expected,
                    functions,
                    seed,
                },
        } => {
            let ctx = ParseContext::from_expectation(&lex_latex(&expected)?, &functions);
            let e = interpret(&expected, &ctx)?;
            let a = interpret(&attempt, &ctx)?;
            let verdict = check_equivalence(&a, &e, seed)?;
            let text = match &verdict {
                EquivalenceVerdict::Different(d) => format!("Different: {}", d.message()),
                v => v.label().to_string(),
            };
            Ok(Output::new(
                text,
                json!({
                    "verdict": verdict.label(),
                    "detail": serde_json::to_value(&verdict).expect("verdicts serialize"),
                }),
            ))
        }
        Command::Grade {
            exercise_id,
            answer,
            latex,
            bank,
        } => {
            let tutor = TutorSetup::new(bank).load()?;
            let exercise = tutor.exercise(&exercise_id)?;
            let answer = if latex {
                Answer::Latex(answer)
            } else {
                Answer::Text(answer)
            };
            let g = tutor.grade(&answer, exercise)?;
            Ok(Output::new(
                format!("{:?} (score {:.3})", g.grade, g.score),
                serde_json::to_value(&g).expect("gradings serialize"),
            ))
        }
        Command::Simulate {
            students,
            seed,
            cohort,
            bank,
            models,
            out,
        } => {
            let mut setup = TutorSetup::new(bank);
            for path in models {
                let tier = load_model(&path)?
                    .tier()
                    .ok_or_else(|| CliError::Config(format!("{} has no tier", path.display())))?;
                setup.models.insert(tier, path);
            }
            let tutor = setup.load()?;
            let n = students as usize;
            let spec = match cohort {
                CohortKind::Null => CohortSpec::null(n, seed),
                CohortKind::Responsive => CohortSpec::responsive(n, seed),
            };
            let lines = simulate(&tutor, &spec)?;
            let summary = json!({"students": n, "seed": seed, "lines": lines.len(), "out": out});
            match &out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    write_log(&mut w, &lines)?;
                    w.flush()?;
                    Ok(Output::new(
                        format!(
                            "{} log lines for {n} students written to {}",
                            lines.len(),
                            path.display()
                        ),
                        summary,
                    ))
                }
                None => {
                    let mut buf = Vec::new();
                    write_log(&mut buf, &lines)?;
                    let text = String::from_utf8(buf).expect("logs are utf-8");
                    Ok(Output::new(text.trim_end().to_string(), summary))
                }
            }
        }
        Command::Report { log } => {
            let records = load_log(&log)?;
            let report = LearningGainReport::from_log(&records);
            Ok(Output::new(
                report.to_text().trim_end(),
                serde_json::to_value(&report).expect("reports serialize"),
            ))
        }
        Command::Serve { config } => {
            let path = config_path(config.as_deref())?;
            let config = ServiceConfig::load(&path)?;
            let tutor = Arc::new(config.tutor.load()?);
            let app = Arc::new(AppState::open(tutor, &config.log, config.seed)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(app, config.bind))?;
            Ok(Output::new("stopped", json!({"stopped": true})))
        }
    }
}
