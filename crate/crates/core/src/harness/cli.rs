//! The `mdetox` command line.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 when a model,
//! translator or scorer backend fails or is unavailable. Every file is
//! written to a temporary sibling first and renamed into place.
//!
//! Settings can come from a TOML file passed with `--config`; flags win
//! over the file and the file wins over built-in defaults. Relative paths in
//! the file are resolved against the file's directory.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [lexicons]
//! en = "lexicons/en.txt"
//! ru = "lexicons/ru.txt"
//!
//! [corpora]
//! en = "data/en_train.tsv"
//!
//! [thresholds]
//! sta_en = 0.8
//! fl_en = 0.5
//! condbert_toxicity = 0.5
//! near_copy = 0.95
//!
//! [backends]
//! seq2seq = "lexicon-delete"
//! translator = "stub:data/translations.tsv"
//! mlm = "stub"
//! mlm_script = "data/mlm.tsv"
//!
//! [scorers]
//! suite = "reference"
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, Detoxifier};
use crate::backtranslation::{backtranslate_detox, translator_by_id, BacktranslationConfig, BacktranslationError};
use crate::baselines::{CondBertConfig, CondBertDetoxifier, DeleteDetoxifier, LexiconToxicity, ScriptedMaskedLM};
use crate::corpus::{load_parallel_tsv, split_train_dev, LanguageTag, Split};
use crate::lexicon::{load_lexicon, ToxicLexicon};
use crate::metrics::{reference_scorer_suite, scores_to_jsonl, MetricProfile, SuiteDescriptor};
use crate::seq2seq::{
    backend_by_id, experiment_system_id, prepare_training_data, ExperimentKind, ExperimentSetup, LanguageData,
    ModelHandle, TrainingConfig,
};

use super::io::{read_text, write_atomic};
use super::{
    copy_rate, evaluate_run, render_report, EvaluationReport, ReportFormat, ReportRow, RunManifest, SystemRun,
    NEAR_COPY_THRESHOLD,
};

#[derive(Debug, Parser)]
#[command(name = "mdetox", version, about = "Text detoxification baselines, experiments and evaluation")]
struct Cli {
    /// TOML settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detoxify an input file and write a JSONL run.
    Detox(DetoxArgs),
    /// Fine-tune a seq2seq backend and write a model handle.
    Train(TrainArgs),
    /// Score a run and record its report row.
    Evaluate(EvaluateArgs),
    /// Render row files as a TSV, JSON or markdown report.
    Report(ReportArgs),
    /// Print exact and near copy rates of a run.
    DiagCopy(DiagCopyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Delete,
    Condbert,
    Seq2seq,
    Backtranslate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PivotMethod {
    Delete,
    Condbert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Parallel TSV; the first column is the input.
    Tsv,
    /// One input per non-empty line.
    Lines,
}

#[derive(Debug, clap::Args)]
struct DetoxArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    language: LanguageTag,
    #[arg(long, value_enum, default_value_t = InputFormat::Tsv)]
    input_format: InputFormat,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Masked-LM backend for condbert; only `stub` is built in.
    #[arg(long)]
    mlm: Option<String>,
    #[arg(long)]
    mlm_script: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tox_threshold: Option<f64>,
    /// Handle file written by `train`.
    #[arg(long)]
    handle: Option<PathBuf>,
    /// `identity`, `stub:<tsv>` or an external translator id.
    #[arg(long)]
    translator: Option<String>,
    #[arg(long)]
    pivot: Option<LanguageTag>,
    #[arg(long, value_enum, default_value_t = PivotMethod::Delete)]
    pivot_method: PivotMethod,
    #[arg(long)]
    pivot_lexicon: Option<PathBuf>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    system_id: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
struct TrainArgs {
    #[arg(long)]
    backend: Option<String>,
    #[arg(long, value_parser = parse_kind)]
    setup: ExperimentKind,
    /// Training corpus as `lang=path`; repeatable.
    #[arg(long = "train", value_parser = parse_lang_path)]
    train: Vec<(LanguageTag, PathBuf)>,
    /// Evaluation language; repeatable. Defaults to the training languages.
    #[arg(long = "eval")]
    eval: Vec<LanguageTag>,
    #[arg(long)]
    equalize_total: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Backend option as `key=value`; repeatable.
    #[arg(long = "option", value_parser = parse_key_value)]
    options: Vec<(String, String)>,
    /// Shorthand for `--option lexicon=<path>`.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    warmup_steps: Option<u32>,
    #[arg(long)]
    batch_size: Option<u32>,
    /// Hold out this share of each training corpus as dev data.
    #[arg(long)]
    dev_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Metric profile (`en` or `ru`); defaults to the run's language.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    sta_threshold: Option<f64>,
    #[arg(long)]
    fl_threshold: Option<f64>,
    #[arg(long)]
    near_threshold: Option<f64>,
    /// Also write per-sentence scores as JSONL.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Row file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add to the row file instead of replacing it. A row for the same
    /// system and language is overwritten.
    #[arg(long)]
    append: bool,
}

#[derive(Debug, clap::Args)]
struct ReportArgs {
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Row files from `evaluate`, or JSON reports.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct DiagCopyArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    near_threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: crate::seq2seq::ExperimentError| e.to_string())
}

fn parse_lang_path(s: &str) -> Result<(LanguageTag, PathBuf), String> {
    let (lang, path) = s.split_once('=').ok_or("expected lang=path")?;
    let lang = lang.parse::<LanguageTag>().map_err(|e| e.to_string())?;
    Ok((lang, PathBuf::from(path)))
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    Ok((k.to_string(), v.to_string()))
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub lexicons: BTreeMap<LanguageTag, PathBuf>,
    #[serde(default)]
    pub corpora: BTreeMap<LanguageTag, PathBuf>,
    #[serde(default)]
    pub thresholds: ThresholdSettings,
    #[serde(default)]
    pub backends: BackendSettings,
    #[serde(default)]
    pub scorers: ScorerSettings,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSettings {
    pub sta_en: Option<f64>,
    pub fl_en: Option<f64>,
    pub condbert_toxicity: Option<f64>,
    pub near_copy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSettings {
    pub seq2seq: Option<String>,
    pub translator: Option<String>,
    pub mlm: Option<String>,
    pub mlm_script: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSettings {
    pub suite: Option<String>,
}

impl CliConfig {
    pub fn parse(content: &str, base: &Path) -> Result<Self, toml::de::Error> {
        let mut cfg: Self = toml::from_str(content)?;
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.output_dir.as_mut().map(join);
        cfg.lexicons.values_mut().for_each(join);
        cfg.corpora.values_mut().for_each(join);
        cfg.backends.mlm_script.as_mut().map(join);
        if let Some(t) = cfg.backends.translator.as_mut() {
            if let Some(path) = t.strip_prefix("stub:") {
                let mut p = PathBuf::from(path);
                join(&mut p);
                *t = format!("stub:{}", p.display());
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let content = read_text(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&content, base).with_context(|| format!("parsing config {}", path.display()))
    }

    fn lexicon_for(&self, flag: Option<&PathBuf>, language: LanguageTag) -> Result<PathBuf, Failure> {
        flag.cloned()
            .or_else(|| self.lexicons.get(&language).cloned())
            .ok_or_else(|| Failure::Usage(anyhow!("no lexicon for {language}: pass --lexicon or set lexicons.{language}")))
    }

    fn output(&self, flag: Option<&PathBuf>, default_name: &str) -> Result<PathBuf, Failure> {
        match (flag, &self.output_dir) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(dir)) => Ok(dir.join(default_name)),
            (None, None) => Err(Failure::Usage(anyhow!("pass --out or set output_dir"))),
        }
    }
}

/// One entry of a row file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub row: ReportRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteDescriptor>,
}

/// What `train` writes and `detox --method seq2seq` reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandleFile {
    pub system_id: String,
    pub handle: ModelHandle,
    pub setup: ExperimentSetup,
    pub config: TrainingConfig,
    pub training_pairs: usize,
    pub training_records: BTreeMap<LanguageTag, usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Backend(anyhow::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Backend(_) => 2,
        }
    }
}

trait OrUsage<T> {
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrUsage<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

/// Configuration problems are the caller's to fix; everything else a
/// backend reports counts as a backend failure.
fn classify_backend(e: BackendError) -> Failure {
    match e {
        BackendError::Config { .. } => Failure::Usage(e.into()),
        other => Failure::Backend(other.into()),
    }
}

fn check_unit(name: &str, value: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Failure::Usage(anyhow!("{name} {value} outside [0, 1]")))
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    write_atomic(path, content.as_bytes())
        .with_context(|| format!("writing {}", path.display()))
        .usage()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Runs the command line over `argv` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Backend(e)) = &f;
            eprintln!("error: {e:#}");
            f.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => CliConfig::load(path).usage()?,
        None => CliConfig::default(),
    };
    match cli.command {
        Command::Detox(args) => detox(args, &config),
        Command::Train(args) => train(args, &config),
        Command::Evaluate(args) => evaluate(args, &config),
        Command::Report(args) => report(args),
        Command::DiagCopy(args) => diag_copy(args, &config),
    }
}

fn read_inputs(path: &Path, language: LanguageTag, format: InputFormat) -> Result<Vec<String>, Failure> {
    let inputs = match format {
        InputFormat::Tsv => load_parallel_tsv(path, language, Split::Test).usage()?.toxic_texts(),
        InputFormat::Lines => read_text(path)
            .with_context(|| format!("reading {}", path.display()))
            .usage()?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
    };
    if inputs.is_empty() {
        return Err(Failure::Usage(anyhow!("{} has no inputs", path.display())));
    }
    Ok(inputs)
}

fn load_lex(path: &Path, language: LanguageTag) -> Result<ToxicLexicon, Failure> {
    load_lexicon(path, language).usage()
}

fn condbert_detoxifier(
    args: &DetoxArgs,
    config: &CliConfig,
    lexicon: ToxicLexicon,
) -> Result<(CondBertDetoxifier, CondBertConfig), Failure> {
    let mlm_id = args
        .mlm
        .clone()
        .or_else(|| config.backends.mlm.clone())
        .unwrap_or_else(|| "stub".into());
    if mlm_id != "stub" {
        return Err(classify_backend(BackendError::unavailable(
            mlm_id,
            "no pretrained masked-LM runtime is compiled in",
        )));
    }
    let script = args
        .mlm_script
        .clone()
        .or_else(|| config.backends.mlm_script.clone())
        .ok_or_else(|| Failure::Usage(anyhow!("the stub masked LM needs --mlm-script")))?;
    let mlm = ScriptedMaskedLM::from_file(&script).map_err(classify_backend)?;
    let defaults = CondBertConfig::default();
    let cfg = CondBertConfig {
        k: args.k.unwrap_or(defaults.k),
        tox_threshold: check_unit(
            "condbert toxicity threshold",
            args.tox_threshold
                .or(config.thresholds.condbert_toxicity)
                .unwrap_or(defaults.tox_threshold),
        )?,
    };
    let toxicity = LexiconToxicity(lexicon.clone());
    let detoxifier = CondBertDetoxifier::new(lexicon, Box::new(mlm), Box::new(toxicity), cfg).usage()?;
    Ok((detoxifier, cfg))
}

fn detox(args: DetoxArgs, config: &CliConfig) -> Result<(), Failure> {
    let language = args.language;
    let inputs = read_inputs(&args.input, language, args.input_format)?;
    let seed = args.seed.or(config.seed);
    let mut details = BTreeMap::new();
    details.insert("input".to_string(), serde_json::json!(args.input.display().to_string()));

    let (default_id, backend_id, outputs, provenance) = match args.method {
        Method::Delete => {
            let lexicon = load_lex(&config.lexicon_for(args.lexicon.as_ref(), language)?, language)?;
            let d = DeleteDetoxifier::new(lexicon);
            let outputs = d.detoxify(&inputs, language).map_err(classify_backend)?;
            ("delete".to_string(), d.id(), outputs, None)
        }
        Method::Condbert => {
            let lexicon = load_lex(&config.lexicon_for(args.lexicon.as_ref(), language)?, language)?;
            let (d, cfg) = condbert_detoxifier(&args, config, lexicon)?;
            details.insert("k".into(), serde_json::json!(cfg.k));
            details.insert("tox_threshold".into(), serde_json::json!(cfg.tox_threshold));
            let outputs = d.detoxify(&inputs, language).map_err(classify_backend)?;
            ("condbert".to_string(), d.id(), outputs, None)
        }
        Method::Seq2seq => {
            let path = args
                .handle
                .as_ref()
                .ok_or_else(|| Failure::Usage(anyhow!("--method seq2seq needs --handle")))?;
            let text = read_text(path).with_context(|| format!("reading {}", path.display())).usage()?;
            let file: HandleFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing handle {}", path.display()))
                .usage()?;
            let backend = backend_by_id(&file.handle.backend).map_err(classify_backend)?;
            let model = backend.restore(&file.handle).map_err(classify_backend)?;
            let outputs = crate::seq2seq::generate(model.as_ref(), &inputs, language).map_err(classify_backend)?;
            details.insert("handle".into(), serde_json::to_value(&file.handle).expect("handle serializes"));
            (file.system_id, backend.id(), outputs, None)
        }
        Method::Backtranslate => {
            let pivot = args
                .pivot
                .ok_or_else(|| Failure::Usage(anyhow!("--method backtranslate needs --pivot")))?;
            let translator_id = args
                .translator
                .clone()
                .or_else(|| config.backends.translator.clone())
                .ok_or_else(|| Failure::Usage(anyhow!("--method backtranslate needs --translator")))?;
            let translator = translator_by_id(&translator_id).map_err(classify_backend)?;
            let pivot_lexicon = load_lex(&config.lexicon_for(args.pivot_lexicon.as_ref(), pivot)?, pivot)?;
            let detoxifier: Box<dyn Detoxifier> = match args.pivot_method {
                PivotMethod::Delete => Box::new(DeleteDetoxifier::new(pivot_lexicon)),
                PivotMethod::Condbert => Box::new(condbert_detoxifier(&args, config, pivot_lexicon)?.0),
            };
            let bt_config = BacktranslationConfig {
                batch_size: args.batch_size.unwrap_or(BacktranslationConfig::default().batch_size),
            };
            let out = backtranslate_detox(&inputs, language, pivot, translator.as_ref(), detoxifier.as_ref(), &bt_config)
                .map_err(|e| match e {
                    BacktranslationError::Translator { source, .. } | BacktranslationError::Detoxifier(source)
                        if matches!(source, BackendError::Config { .. }) =>
                    {
                        Failure::Usage(source.into())
                    }
                    BacktranslationError::SamePivot(_) | BacktranslationError::InvalidBatchSize => {
                        Failure::Usage(e.into())
                    }
                    other => Failure::Backend(other.into()),
                })?;
            details.insert("pivot".into(), serde_json::json!(pivot));
            details.insert("translator".into(), serde_json::json!(translator.id()));
            let id = format!("backtranslate-{pivot}-{}", detoxifier.id());
            (id, format!("{}+{}", translator.id(), detoxifier.id()), out.outputs, Some(out.provenance))
        }
    };

    let system_id = args.system_id.clone().unwrap_or(default_id);
    let method = match args.method {
        Method::Delete => "delete",
        Method::Condbert => "condbert",
        Method::Seq2seq => "seq2seq",
        Method::Backtranslate => "backtranslate",
    };
    let mut manifest = RunManifest::new(&system_id, method, backend_id);
    manifest.seed = seed;
    manifest.details = details;
    let run = SystemRun::new(&system_id, language, inputs, outputs, manifest.finish()).usage()?;
    let out = config.output(args.out.as_ref(), &format!("{system_id}.{language}.jsonl"))?;
    if let Some(provenance) = provenance {
        let mut lines = String::new();
        for (index, p) in provenance.iter().enumerate() {
            let line = serde_json::json!({"index": index, "pivot": p.pivot, "detoxed_pivot": p.detoxed_pivot});
            lines.push_str(&line.to_string());
            lines.push('\n');
        }
        let mut name = out.clone().into_os_string();
        name.push(".provenance.jsonl");
        write_file(Path::new(&name), &lines)?;
    }
    run.write(&out).usage()?;
    println!("wrote {} outputs to {}", run.len(), out.display());
    Ok(())
}

fn train(args: TrainArgs, config: &CliConfig) -> Result<(), Failure> {
    let backend_id = args
        .backend
        .clone()
        .or_else(|| config.backends.seq2seq.clone())
        .ok_or_else(|| Failure::Usage(anyhow!("pass --backend or set backends.seq2seq")))?;
    let backend = backend_by_id(&backend_id).map_err(classify_backend)?;

    let train_paths: BTreeMap<LanguageTag, PathBuf> = if args.train.is_empty() {
        config.corpora.clone()
    } else {
        args.train.iter().cloned().collect()
    };
    if train_paths.is_empty() {
        return Err(Failure::Usage(anyhow!("pass --train lang=path or set [corpora]")));
    }
    let eval: Vec<LanguageTag> = if args.eval.is_empty() {
        train_paths.keys().copied().collect()
    } else {
        args.eval.clone()
    };
    let mut setup = ExperimentSetup::new(args.setup, train_paths.keys().copied(), eval).usage()?;
    if let Some(total) = args.equalize_total {
        setup = setup.with_equalize_total(total);
    }

    let seed = args.seed.or(config.seed).unwrap_or(0);
    let mut cfg = TrainingConfig::mt5(seed);
    if let Some(iterations) = args.iterations {
        cfg.max_iterations = iterations;
    }
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(w) = args.warmup_steps {
        cfg.warmup_steps = w;
    }
    if let Some(b) = args.batch_size {
        cfg.batch_size = b;
    }
    if let Some(lexicon) = &args.lexicon {
        cfg = cfg.with_option("lexicon", lexicon.display().to_string());
    }
    for (k, v) in &args.options {
        cfg = cfg.with_option(k, v.clone());
    }
    cfg.validate().usage()?;

    let mut corpora = BTreeMap::new();
    for (&language, path) in &train_paths {
        let corpus = load_parallel_tsv(path, language, Split::Train).usage()?;
        let data = match args.dev_fraction {
            Some(frac) => {
                let (train, dev) = split_train_dev(&corpus, frac, seed).usage()?;
                LanguageData {
                    train: Some(train),
                    dev: Some(dev),
                    test: None,
                }
            }
            None => LanguageData {
                train: Some(corpus),
                dev: None,
                test: None,
            },
        };
        corpora.insert(language, data);
    }
    let data = prepare_training_data(&setup, &corpora, &cfg).usage()?;
    let model = backend.fine_tune(&data.pairs, &cfg).map_err(classify_backend)?;
    let system_id = experiment_system_id(&backend.id(), &setup);
    let file = HandleFile {
        system_id: system_id.clone(),
        handle: model.handle(),
        setup,
        config: cfg,
        training_pairs: data.pairs.len(),
        training_records: data.records.language_counts().clone(),
    };
    let out = config.output(args.out.as_ref(), &format!("{system_id}.handle.json"))?;
    write_file(&out, &to_json(&file))?;
    println!("trained {system_id} on {} pairs; handle at {}", file.training_pairs, out.display());
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<RowRecord>, Failure> {
    let text = read_text(path).with_context(|| format!("reading {}", path.display())).usage()?;
    if let Ok(rows) = serde_json::from_str::<Vec<RowRecord>>(&text) {
        return Ok(rows);
    }
    let report = EvaluationReport::from_json(&text)
        .with_context(|| format!("{} is neither a row file nor a JSON report", path.display()))
        .usage()?;
    Ok(report
        .rows()
        .iter()
        .map(|row| RowRecord {
            row: row.clone(),
            suite: report.suites().get(&row.language).cloned(),
        })
        .collect())
}

fn row_tsv(row: &ReportRow) -> String {
    match &row.metrics {
        Some(m) => format!(
            "{}\t{}\tSTA={:.3}\tSIM={:.3}\tFL={:.3}\tJ={:.3}\tcopy={:.3}\tnear_copy={:.3}",
            row.language, row.system_id, m.sta, m.sim, m.fl, m.joint, m.copy_rate, m.near_copy_rate
        ),
        None => format!(
            "{}\t{}\tFAILED\t{}",
            row.language,
            row.system_id,
            row.failure.as_deref().unwrap_or("")
        ),
    }
}

fn evaluate(args: EvaluateArgs, config: &CliConfig) -> Result<(), Failure> {
    let run = SystemRun::read(&args.run, None).usage()?;
    let language = run.language();
    let profile_name = args.profile.clone().unwrap_or_else(|| language.to_string());
    let mut profile = MetricProfile::by_name(&profile_name).ok_or_else(|| {
        Failure::Usage(anyhow!("no built-in metric profile {profile_name:?}; pass --profile en or ru"))
    })?;
    if let Some(t) = args.sta_threshold.or(config.thresholds.sta_en) {
        profile = profile.with_sta_threshold(check_unit("STA threshold", t)?);
    }
    if let Some(t) = args.fl_threshold.or(config.thresholds.fl_en) {
        profile = profile.with_fl_threshold(check_unit("FL threshold", t)?);
    }
    let near = check_unit(
        "near-copy threshold",
        args.near_threshold
            .or(config.thresholds.near_copy)
            .unwrap_or(NEAR_COPY_THRESHOLD),
    )?;
    let suite_id = args
        .suite
        .clone()
        .or_else(|| config.scorers.suite.clone())
        .unwrap_or_else(|| "reference".into());

    let outcome = if suite_id == "reference" {
        let lexicon = load_lex(&config.lexicon_for(args.lexicon.as_ref(), language)?, language)?;
        let suite = reference_scorer_suite(lexicon);
        evaluate_run(&run, &suite, &profile, near).map_err(|e| e.to_string())
    } else {
        Err(BackendError::unavailable(&suite_id, "no pretrained scorer runtime is compiled in").to_string())
    };

    let (record, failure) = match outcome {
        Ok(evaluated) => {
            if let Some(path) = &args.scores {
                write_file(path, &scores_to_jsonl(&evaluated.scores))?;
            }
            (
                RowRecord {
                    row: evaluated.row,
                    suite: Some(evaluated.suite),
                },
                None,
            )
        }
        Err(reason) => (
            RowRecord {
                row: ReportRow::failed(run.system_id(), language, run.len(), reason.clone()),
                suite: None,
            },
            Some(reason),
        ),
    };

    let out = match (&args.out, &config.output_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join("rows.json")),
        (None, None) => None,
    };
    if let Some(out) = out {
        let mut rows = if args.append && out.exists() { read_rows(&out)? } else { Vec::new() };
        let key = (record.row.system_id.clone(), record.row.language);
        match rows.iter_mut().find(|r| (r.row.system_id.clone(), r.row.language) == key) {
            Some(existing) => *existing = record.clone(),
            None => rows.push(record.clone()),
        }
        write_file(&out, &to_json(&rows))?;
    }
    println!("{}", row_tsv(&record.row));
    match failure {
        None => Ok(()),
        Some(reason) => Err(Failure::Backend(anyhow!("scoring {} failed: {reason}", run.system_id()))),
    }
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let format: ReportFormat = args.format.parse().usage()?;
    let mut records = Vec::new();
    for path in &args.files {
        records.extend(read_rows(path)?);
    }
    let report = EvaluationReport::from_rows_with_suites(records.into_iter().map(|r| (r.row, r.suite))).usage()?;
    let doc = render_report(&report, format);
    match &args.out {
        Some(out) => write_file(out, &doc),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CopyReport<'a> {
    system_id: &'a str,
    language: LanguageTag,
    exact_rate: f64,
    near_rate: f64,
    near_threshold: f64,
    n: usize,
}

fn diag_copy(args: DiagCopyArgs, config: &CliConfig) -> Result<(), Failure> {
    let run = SystemRun::read(&args.run, None).usage()?;
    let near = check_unit(
        "near-copy threshold",
        args.near_threshold
            .or(config.thresholds.near_copy)
            .unwrap_or(NEAR_COPY_THRESHOLD),
    )?;
    let rates = copy_rate(run.inputs(), run.outputs(), near).usage()?;
    let doc = to_json(&CopyReport {
        system_id: run.system_id(),
        language: run.language(),
        exact_rate: rates.exact_rate,
        near_rate: rates.near_rate,
        near_threshold: near,
        n: rates.n,
    });
    match &args.out {
        Some(out) => write_file(out, &doc),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_paths_resolve_against_file() {
        let cfg = CliConfig::parse(
            "seed = 3\n[lexicons]\nen = \"lex/en.txt\"\n[backends]\ntranslator = \"stub:tr.tsv\"\n",
            Path::new("/etc/mdetox"),
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.lexicons[&LanguageTag::EN], PathBuf::from("/etc/mdetox/lex/en.txt"));
        assert_eq!(cfg.backends.translator.as_deref(), Some("stub:/etc/mdetox/tr.tsv"));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(CliConfig::parse("sed = 3\n", Path::new(".")).is_err());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["mdetox", "detox"]), 1);
        assert_eq!(run(["mdetox", "frobnicate"]), 1);
        assert_eq!(run(["mdetox", "--help"]), 0);
    }

    #[test]
    fn argument_parsers() {
        assert_eq!(
            parse_lang_path("ru=a/b.tsv").unwrap(),
            (LanguageTag::RU, PathBuf::from("a/b.tsv"))
        );
        assert!(parse_lang_path("russian=a").is_err());
        assert_eq!(parse_key_value("k=v=w").unwrap(), ("k".into(), "v=w".into()));
    }
}
