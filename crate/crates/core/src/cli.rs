//! Command-line front end.
//!
//! Every subcommand accepts `--config <file.json>`; explicit flags override values
//! from the file. Exit codes: 0 success, 1 user or configuration error, 2 internal
//! failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::augment::{augment_corpus, AugmentConfig, CachedTranslator, HttpClient, MtClient, Strategy};
use crate::corpus::predictions::{read_predictions, write_predictions, PredictionRecord};
use crate::corpus::{
    load_corpus, load_embeddings, semb, write_corpus, Corpus, Document, LabelMode, LabelSet, Segmentation,
};
use crate::error::{Error, Result};
use crate::metrics::{mcnemar, EvalOptions, Evaluator, MacroAverage, McNemar, MetricsReport};
use crate::semicrf::ModelParams;
use crate::spanrep::SpanFeatureVariant;
use crate::train::{predict, select_max_span_length, train, write_log, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "spancrf",
    version,
    about = "Semi-Markov CRF span segmentation and labeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write the best-validation checkpoint plus a per-epoch log.
    Train(TrainArgs),
    /// Decode documents with a trained model and write a predictions file.
    Predict(PredictArgs),
    /// Score predictions against gold labels, optionally comparing two systems.
    Evaluate(EvaluateArgs),
    /// Write an augmented copy of a labeled training corpus.
    Augment(AugmentArgs),
    /// Train one model per candidate maximum span length and pick the best.
    SweepLmax(SweepArgs),
    /// Print the header of an embeddings file.
    EmbedInfo(EmbedInfoArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TrainingArgs {
    /// Training corpus (JSON Lines).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Training embeddings (SEMB).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Validation corpus (JSON Lines).
    #[arg(long)]
    val_corpus: Option<PathBuf>,
    /// Validation embeddings (SEMB).
    #[arg(long)]
    val_embeddings: Option<PathBuf>,
    /// Maximum span length.
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Decoupled weight decay on span weights and transitions.
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    patience: Option<usize>,
    /// Span representation: `ours` or `simple`.
    #[arg(long)]
    variant: Option<SpanFeatureVariant>,
    /// Window radius of context enrichment (0 disables it).
    #[arg(long)]
    context_radius: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Output checkpoint path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training log path (JSON Lines); defaults to the checkpoint path with `.log.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trained checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Corpus to decode; gold labels, if any, are ignored.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Embeddings for the corpus (SEMB).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output predictions path (JSON Lines).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Gold corpus (JSON Lines).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Predictions to score.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Second predictions file; runs McNemar's test against `--predictions`.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Leave the `None` label out of labeled span and sentence metrics.
    #[arg(long)]
    exclude_none: bool,
    /// Macro-average over every label instead of labels present.
    #[arg(long)]
    macro_all: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Labeled training corpus (JSON Lines).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output corpus path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of deletion, swap, backtranslation.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Per-token deletion probability (at most 0.2 unless the config allows more).
    #[arg(long)]
    deletion_rate: Option<f64>,
    #[arg(long)]
    swap_rate: Option<f64>,
    /// Comma-separated language chain, e.g. en,de,es,en.
    #[arg(long, value_delimiter = ',')]
    bt_chain: Option<Vec<String>>,
    /// Translation endpoint URL.
    #[arg(long)]
    mt_endpoint: Option<String>,
    /// API key sent with translation requests.
    #[arg(long)]
    mt_api_key: Option<String>,
    /// Translation cache (JSON Lines); created if missing.
    #[arg(long)]
    mt_cache: Option<PathBuf>,
    /// Write the augmentation summary as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Comma-separated candidate maximum span lengths.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<usize>>,
    /// Write the sweep report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbedInfoArgs {
    /// Embeddings file (SEMB).
    #[arg(long)]
    embeddings: PathBuf,
}

/// Contents of a `--config` file. Unknown keys are rejected and relative paths are
/// taken relative to the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must name the subcommand being run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    pub exclude_none: bool,
    pub macro_all: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mt_endpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mt_api_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mt_cache: Option<PathBuf>,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
}

impl RunConfig {
    /// Rebases relative paths onto `dir`, the directory holding the config file.
    pub fn resolve_relative(&mut self, dir: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.embeddings,
            &mut self.val_corpus,
            &mut self.val_embeddings,
            &mut self.model,
            &mut self.out,
            &mut self.log,
            &mut self.predictions,
            &mut self.compare,
            &mut self.summary,
            &mut self.mt_cache,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

enum Failure {
    User(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn user<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::User(msg.into()))
}

/// Runs the CLI with `std::io` streams and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs the CLI writing to the given streams and returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Augment(a) => cmd_augment(a, out),
        Command::SweepLmax(a) => cmd_sweep(a, out),
        Command::EmbedInfo(a) => cmd_embed_info(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::User(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            2
        }
    }
}

fn load_config(common: &CommonArgs, command: &str) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        None => RunConfig::default(),
        Some(path) => {
            require_file(path, "--config")?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
            let mut cfg = serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
            if let Some(dir) = path.parent() {
                cfg.resolve_relative(dir);
            }
            cfg
        }
    };
    if let Some(c) = &cfg.command {
        if c != command {
            return user(format!("config is for `{c}`, not `{command}`"));
        }
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
        cfg.augment.seed = seed;
    }
    Ok(cfg)
}

fn require_file(path: &Path, flag: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        user(format!("{flag}: file not found: {}", path.display()))
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a PathBuf, Failure> {
    value
        .as_ref()
        .ok_or_else(|| Failure::User(format!("missing required {flag}")))
}

fn input<'a>(value: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a PathBuf, Failure> {
    let path = required(value, flag)?;
    require_file(path, flag)?;
    Ok(path)
}

fn output<'a>(value: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a PathBuf, Failure> {
    let path = required(value, flag)?;
    check_output(path, flag)?;
    Ok(path)
}

fn check_output(path: &Path, flag: &str) -> CliResult {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            user(format!("{flag}: directory does not exist: {}", dir.display()))
        }
        _ => Ok(()),
    }
}

fn apply_training(cfg: &mut RunConfig, a: TrainingArgs) {
    macro_rules! set {
        ($($field:ident),*) => { $( if a.$field.is_some() { cfg.$field = a.$field; } )* };
    }
    set!(corpus, embeddings, val_corpus, val_embeddings);
    let t = &mut cfg.train;
    if let Some(v) = a.lmax {
        t.lmax = v;
    }
    if let Some(v) = a.epochs {
        t.epochs = v;
    }
    if let Some(v) = a.lr {
        t.learning_rate = v;
    }
    if let Some(v) = a.weight_decay {
        t.weight_decay = v;
    }
    if a.patience.is_some() {
        t.patience = a.patience;
    }
    if let Some(v) = a.variant {
        t.variant = v;
    }
    if let Some(v) = a.context_radius {
        t.context_radius = v;
    }
}

struct Splits {
    labels: LabelSet,
    train: Vec<Document>,
    val: Vec<Document>,
}

fn load_splits(cfg: &RunConfig) -> std::result::Result<Splits, Failure> {
    let corpus = input(&cfg.corpus, "--corpus")?;
    let embeddings = input(&cfg.embeddings, "--embeddings")?;
    let val_corpus = input(&cfg.val_corpus, "--val-corpus")?;
    let val_embeddings = input(&cfg.val_embeddings, "--val-embeddings")?;
    cfg.train.validate()?;

    let Corpus {
        labels,
        docs: mut train,
    } = load_corpus(corpus, LabelMode::Infer)?;
    let labels = labels.ok_or_else(|| Failure::User(format!("{}: no gold labels", corpus.display())))?;
    let mut val = load_corpus(val_corpus, LabelMode::Fixed(&labels))?.docs;
    load_embeddings(embeddings, &mut train)?;
    load_embeddings(val_embeddings, &mut val)?;
    Ok(Splits { labels, train, val })
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(&a.common, "train")?;
    apply_training(&mut cfg, a.training);
    if a.out.is_some() {
        cfg.out = a.out;
    }
    if a.log.is_some() {
        cfg.log = a.log;
    }
    let model_path = output(&cfg.out, "--out")?.clone();
    let log_path = cfg
        .log
        .clone()
        .unwrap_or_else(|| model_path.with_extension("log.jsonl"));
    check_output(&log_path, "--log")?;
    let splits = load_splits(&cfg)?;

    let outcome = train(&splits.train, &splits.val, &splits.labels, &cfg.train)?;
    outcome.params.save(&model_path)?;
    write_log(&log_path, &outcome.log)?;
    let _ = writeln!(out, "labels: {}", splits.labels.names().join(", "));
    match outcome.best_epoch {
        Some(e) => {
            let r = &outcome.log[e - 1];
            let _ = writeln!(
                out,
                "best epoch {e}: val span micro-F1 {:.4}, sentence micro-F1 {:.4}",
                r.val_span_micro_f1, r.val_sentence_micro_f1
            );
        }
        None => {
            let _ = writeln!(out, "no epochs run; wrote initial parameters");
        }
    }
    let _ = writeln!(
        out,
        "model: {}\nlog: {}",
        model_path.display(),
        log_path.display()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(&a.common, "predict")?;
    for (dst, src) in [
        (&mut cfg.model, a.model),
        (&mut cfg.corpus, a.corpus),
        (&mut cfg.embeddings, a.embeddings),
        (&mut cfg.out, a.out),
    ] {
        if src.is_some() {
            *dst = src;
        }
    }
    let model = input(&cfg.model, "--model")?;
    let corpus = input(&cfg.corpus, "--corpus")?;
    let embeddings = input(&cfg.embeddings, "--embeddings")?;
    let out_path = output(&cfg.out, "--out")?;

    let params = ModelParams::load(model)?;
    let mut docs = load_corpus(corpus, LabelMode::Ignore)?.docs;
    let dim = load_embeddings(embeddings, &mut docs)?;
    if dim != params.dim {
        return user(format!(
            "embedding dimension {dim} in {} does not match model dimension {}",
            embeddings.display(),
            params.dim
        ));
    }
    let segs = predict(&docs, &params)?;
    let records: Vec<PredictionRecord> = docs
        .iter()
        .zip(&segs)
        .map(|(d, s)| PredictionRecord::from_segmentation(&d.id, s, &params.labels))
        .collect();
    write_predictions(out_path, &records)?;
    let _ = writeln!(
        out,
        "wrote {} predictions to {}",
        records.len(),
        out_path.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationOutput {
    report: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    compare_report: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mcnemar: Option<McNemar>,
}

/// Aligns predictions with gold documents by id.
fn align(gold: &[Document], records: Vec<PredictionRecord>, labels: &LabelSet) -> Result<Vec<Segmentation>> {
    let mut by_id: HashMap<String, PredictionRecord> =
        records.into_iter().map(|r| (r.id.clone(), r)).collect();
    let segs = gold
        .iter()
        .map(|d| {
            let rec = by_id
                .remove(&d.id)
                .ok_or_else(|| Error::MissingPrediction(d.id.clone()))?;
            let seg = rec.to_segmentation(labels)?;
            if seg.num_sentences() != d.len() {
                return Err(Error::SentenceCountMismatch {
                    id: d.id.clone(),
                    expected: d.len(),
                    found: seg.num_sentences(),
                });
            }
            Ok(seg)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(extra) = by_id.keys().min() {
        return Err(Error::UnknownDocument(extra.clone()));
    }
    Ok(segs)
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(&a.common, "evaluate")?;
    for (dst, src) in [
        (&mut cfg.corpus, a.corpus),
        (&mut cfg.predictions, a.predictions),
        (&mut cfg.compare, a.compare),
        (&mut cfg.out, a.out),
    ] {
        if src.is_some() {
            *dst = src;
        }
    }
    cfg.exclude_none |= a.exclude_none;
    cfg.macro_all |= a.macro_all;
    let corpus = input(&cfg.corpus, "--corpus")?;
    let predictions = input(&cfg.predictions, "--predictions")?;
    let compare = match &cfg.compare {
        Some(_) => Some(input(&cfg.compare, "--compare")?),
        None => None,
    };
    if let Some(p) = &cfg.out {
        check_output(p, "--out")?;
    }

    let gold = load_corpus(corpus, LabelMode::Infer)?;
    let records = read_predictions(predictions)?;
    let compare_records = compare.map(read_predictions).transpose()?;
    let base = gold
        .labels
        .clone()
        .ok_or_else(|| Failure::User(format!("{}: no gold labels", corpus.display())))?;
    let predicted_names: Vec<String> = records
        .iter()
        .chain(compare_records.iter().flatten())
        .flat_map(|r| r.spans.iter().map(|s| s.2.clone()))
        .collect();
    let labels = base.extended(predicted_names.iter().map(String::as_str));
    let mut docs = gold.docs;
    for d in &mut docs {
        if d.gold_labels.is_none() {
            return Err(Error::MissingGold(d.id.clone()).into());
        }
        // Gold indices are into the base set, which is a prefix of the extended set.
        d.validate(labels.len())?;
    }

    let options = EvalOptions {
        macro_average: if cfg.macro_all {
            MacroAverage::AllLabels
        } else {
            MacroAverage::PresentOnly
        },
        exclude: if cfg.exclude_none {
            labels.index("None")
        } else {
            None
        },
    };
    let score = |segs: &[Segmentation]| -> Result<MetricsReport> {
        let mut ev = Evaluator::new(labels.clone(), options);
        for (d, s) in docs.iter().zip(segs) {
            ev.add(&d.gold_segmentation()?, s)?;
        }
        Ok(ev.report())
    };
    let pred = align(&docs, records, &labels)?;
    let report = score(&pred)?;
    let _ = writeln!(out, "{}", report.render_table());

    let (compare_report, test) = match compare_records {
        None => (None, None),
        Some(records) => {
            let other = align(&docs, records, &labels)?;
            let other_report = score(&other)?;
            let flat = |segs: &[Segmentation]| segs.iter().flat_map(|s| s.flatten()).collect::<Vec<_>>();
            let gold_flat: Vec<usize> = docs
                .iter()
                .flat_map(|d| d.gold_labels.clone().unwrap_or_default())
                .collect();
            let test = mcnemar(&gold_flat, &flat(&pred), &flat(&other))?;
            let _ = writeln!(out, "comparison system:\n{}", other_report.render_table());
            let _ = writeln!(
                out,
                "McNemar: b = {}, c = {}, statistic = {:.4}, p = {:.4}{}",
                test.b,
                test.c,
                test.statistic,
                test.p_value,
                test.exact_p_value
                    .map(|p| format!(", exact p = {p:.4}"))
                    .unwrap_or_default()
            );
            (Some(other_report), Some(test))
        }
    };
    if let Some(path) = &cfg.out {
        let json = serde_json::to_string_pretty(&EvaluationOutput {
            report,
            compare_report,
            mcnemar: test,
        })
        .expect("report serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn cmd_augment(a: AugmentArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(&a.common, "augment")?;
    for (dst, src) in [
        (&mut cfg.corpus, a.corpus),
        (&mut cfg.out, a.out),
        (&mut cfg.mt_cache, a.mt_cache),
        (&mut cfg.summary, a.summary),
    ] {
        if src.is_some() {
            *dst = src;
        }
    }
    if a.mt_endpoint.is_some() {
        cfg.mt_endpoint = a.mt_endpoint;
    }
    if a.mt_api_key.is_some() {
        cfg.mt_api_key = a.mt_api_key;
    }
    let aug = &mut cfg.augment;
    if let Some(s) = a.strategies {
        aug.strategies = s;
    }
    if let Some(v) = a.deletion_rate {
        aug.deletion_rate = v;
    }
    if let Some(v) = a.swap_rate {
        aug.swap_rate = v;
    }
    if let Some(v) = a.bt_chain {
        aug.bt_language_chain = v;
    }
    cfg.augment.validate()?;
    let corpus = input(&cfg.corpus, "--corpus")?;
    let out_path = output(&cfg.out, "--out")?;
    if out_path == corpus {
        return user("--out must differ from --corpus");
    }
    if let Some(p) = &cfg.mt_cache {
        check_output(p, "--mt-cache")?;
    }
    if let Some(p) = &cfg.summary {
        check_output(p, "--summary")?;
    }

    let needs_mt = cfg.augment.enabled().contains(&Strategy::Backtranslation);
    let translator = if needs_mt {
        let backend: Option<Box<dyn MtClient>> = cfg
            .mt_endpoint
            .as_ref()
            .map(|url| Box::new(HttpClient::new(url.clone(), cfg.mt_api_key.clone())) as Box<dyn MtClient>);
        match (&cfg.mt_cache, backend) {
            (None, None) => return user("back-translation needs --mt-endpoint or --mt-cache"),
            (Some(path), backend) => Some(CachedTranslator::open(path, backend)?),
            (None, backend) => Some(CachedTranslator::in_memory(backend)),
        }
    } else {
        None
    };

    let Corpus { labels, docs } = load_corpus(corpus, LabelMode::Infer)?;
    let (augmented, summary) = augment_corpus(&docs, &cfg.augment, translator.as_ref())?;
    write_corpus(out_path, &augmented, labels.as_ref())?;
    let _ = write!(out, "{}", summary.render());
    if let Some(path) = &cfg.summary {
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    let failed = summary.failed_strategies();
    if !failed.is_empty() {
        let names: Vec<&str> = failed.iter().map(|s| s.name()).collect();
        return user(format!("strategies produced no documents: {}", names.join(", ")));
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(&a.common, "sweep-lmax")?;
    apply_training(&mut cfg, a.training);
    if a.candidates.is_some() {
        cfg.candidates = a.candidates;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    let candidates = cfg.candidates.clone().unwrap_or_default();
    if candidates.is_empty() {
        return user("--candidates must list at least one span length");
    }
    if candidates.contains(&0) {
        return user("--candidates must be positive");
    }
    if let Some(p) = &cfg.out {
        check_output(p, "--out")?;
    }
    let splits = load_splits(&cfg)?;
    let report = select_max_span_length(
        &splits.train,
        &splits.val,
        &splits.labels,
        &candidates,
        &cfg.train,
    )?;
    let _ = writeln!(
        out,
        "{:>6}  {:>10}  {:>10}  {:>10}  {:>5}",
        "lmax", "span-F1", "seg-F1", "sent-F1", "epoch"
    );
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{:>6}  {:>10.4}  {:>10.4}  {:>10.4}  {:>5}",
            row.lmax,
            row.val_span_micro_f1,
            row.val_span_seg_f1,
            row.val_sentence_micro_f1,
            row.best_epoch.map_or("-".to_string(), |e| e.to_string())
        );
    }
    let _ = writeln!(out, "chosen lmax: {}", report.chosen);
    if let Some(path) = &cfg.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn cmd_embed_info(a: EmbedInfoArgs, out: &mut dyn Write) -> CliResult {
    require_file(&a.embeddings, "--embeddings")?;
    let header = semb::read_header(&a.embeddings)?;
    let sentences: usize = header.docs.iter().map(|(_, m)| m).sum();
    let _ = writeln!(
        out,
        "version: {}\ndim: {}\ndocuments: {}\nsentences: {}",
        header.version,
        header.dim,
        header.docs.len(),
        sentences
    );
    for (id, m) in &header.docs {
        let _ = writeln!(out, "  {id}\t{m}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("spancrf").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_subcommand_is_user_error() {
        assert_eq!(run_capture(&["frobnicate"]).0, 1);
    }

    #[test]
    fn help_succeeds() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("sweep-lmax"));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>("{\"corpus\": \"a\", \"typo\": 1}").is_err());
        assert!(serde_json::from_str::<RunConfig>("{\"train\": {\"lmax\": 3, \"bogus\": 1}}").is_err());
        let cfg: RunConfig = serde_json::from_str("{\"train\": {\"lmax\": 3}}").unwrap();
        assert_eq!(cfg.train.lmax, 3);
    }

    #[test]
    fn config_for_other_command_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, "{\"command\": \"predict\"}").unwrap();
        let (code, _, err) = run_capture(&["train", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("not `train`"));
    }

    #[test]
    fn missing_required_flag_named() {
        let (code, _, err) = run_capture(&["predict"]);
        assert_eq!(code, 1);
        assert!(err.contains("--model"));
    }
}
