//! Seq2seq detoxifier backends and the monolingual, multilingual and
//! cross-lingual experiment setups.
//!
//! Pretrained checkpoints plug in behind [`DetoxModelBackend`] under an
//! opaque identifier. This build ships two deterministic reference
//! backends, `copy` and `lexicon-delete`, which let the whole pipeline run
//! without model downloads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{detoxify_aligned, BackendError, Detoxifier, MODEL_CACHE_ENV};
use crate::baselines::delete_detox;
use crate::corpus::{equalize_languages, flatten_references, Corpus, CorpusError, FlatPair, LanguageTag, Split};
use crate::harness::{RunError, RunManifest, SystemRun};
use crate::lexicon::{load_lexicon, ToxicLexicon};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment setup: {0}")]
    InvalidSetup(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no {split} split provided for {language}")]
    MissingSplit { language: LanguageTag, split: Split },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("training {backend} failed: {source}")]
    Training {
        backend: String,
        #[source]
        source: BackendError,
    },
    #[error("generation for {language} failed: {source}")]
    Generation {
        language: LanguageTag,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrSchedule {
    #[serde(rename = "linear-decay")]
    LinearDecay,
}

/// Fine-tuning hyperparameters handed to a backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub warmup_steps: u32,
    pub batch_size: u32,
    pub max_iterations: u32,
    pub seed: u64,
    pub checkpoint_every: u32,
    /// Backend-specific settings, e.g. `lexicon` for `lexicon-delete` or
    /// `decoding` for pretrained models.
    #[serde(default)]
    pub backend_options: BTreeMap<String, String>,
}

impl TrainingConfig {
    pub const MT5_ITERATIONS: u32 = 40_000;
    pub const MBART_ITERATIONS: [u32; 4] = [1_000, 3_000, 5_000, 10_000];
    pub const MAX_WARMUP: u32 = 1_000;
    /// Learning rates explored for fine-tuning, inclusive.
    pub const LR_RANGE: (f64, f64) = (5e-5, 1e-3);

    /// Defaults for mT5-class backends.
    pub fn mt5(seed: u64) -> Self {
        Self {
            learning_rate: 1e-4,
            schedule: LrSchedule::LinearDecay,
            warmup_steps: 500,
            batch_size: 8,
            max_iterations: Self::MT5_ITERATIONS,
            seed,
            checkpoint_every: 1_000,
            backend_options: BTreeMap::from([("decoding".to_string(), "greedy".to_string())]),
        }
    }

    /// Defaults for mBART-class backends; `iterations` must be one of
    /// [`Self::MBART_ITERATIONS`].
    pub fn mbart(iterations: u32, seed: u64) -> Result<Self, ExperimentError> {
        if !Self::MBART_ITERATIONS.contains(&iterations) {
            return Err(ExperimentError::InvalidConfig(format!(
                "mBART iteration count {iterations} not in {:?}",
                Self::MBART_ITERATIONS
            )));
        }
        Ok(Self {
            max_iterations: iterations,
            ..Self::mt5(seed)
        })
    }

    pub fn with_option(mut self, key: &str, value: impl Into<String>) -> Self {
        self.backend_options.insert(key.to_string(), value.into());
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: String| Err(ExperimentError::InvalidConfig(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.warmup_steps > Self::MAX_WARMUP {
            return fail(format!("warmup {} exceeds {}", self.warmup_steps, Self::MAX_WARMUP));
        }
        if self.max_iterations == 0 || self.batch_size == 0 || self.checkpoint_every == 0 {
            return fail("iterations, batch size and checkpoint interval must be positive".into());
        }
        if self.warmup_steps > self.max_iterations {
            return fail(format!(
                "warmup {} exceeds max iterations {}",
                self.warmup_steps, self.max_iterations
            ));
        }
        Ok(())
    }

    /// Learning rate at `step`: linear warmup from 0, then linear decay to
    /// 0 at `max_iterations`.
    pub fn learning_rate_at(&self, step: u32) -> f64 {
        let step = step.min(self.max_iterations) as f64;
        let warmup = self.warmup_steps as f64;
        if step < warmup {
            self.learning_rate * step / warmup
        } else {
            let remaining = (self.max_iterations as f64 - step).max(0.0);
            let span = (self.max_iterations as f64 - warmup).max(1.0);
            self.learning_rate * remaining / span
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Monolingual,
    Multilingual,
    Crosslingual,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Monolingual => "monolingual",
            ExperimentKind::Multilingual => "multilingual",
            ExperimentKind::Crosslingual => "crosslingual",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monolingual" => Ok(Self::Monolingual),
            "multilingual" => Ok(Self::Multilingual),
            "crosslingual" | "cross-lingual" => Ok(Self::Crosslingual),
            other => Err(ExperimentError::InvalidSetup(format!("unknown setup kind {other:?}"))),
        }
    }
}

/// Which languages a model trains on and which it is evaluated on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    kind: ExperimentKind,
    train_languages: BTreeSet<LanguageTag>,
    eval_languages: BTreeSet<LanguageTag>,
    /// Records drawn in total (split evenly) for multilingual training.
    equalize_total: usize,
}

impl ExperimentSetup {
    pub const DEFAULT_EQUALIZE_TOTAL: usize = 10_000;

    pub fn new(
        kind: ExperimentKind,
        train: impl IntoIterator<Item = LanguageTag>,
        eval: impl IntoIterator<Item = LanguageTag>,
    ) -> Result<Self, ExperimentError> {
        let train_languages: BTreeSet<_> = train.into_iter().collect();
        let eval_languages: BTreeSet<_> = eval.into_iter().collect();
        let invalid = |m: &str| Err(ExperimentError::InvalidSetup(format!("{kind}: {m}")));
        if train_languages.is_empty() || eval_languages.is_empty() {
            return invalid("train and eval languages must be non-empty");
        }
        match kind {
            ExperimentKind::Monolingual => {
                if train_languages.len() != 1 || train_languages != eval_languages {
                    return invalid("needs exactly one language, shared by training and evaluation");
                }
            }
            ExperimentKind::Multilingual => {
                if train_languages.len() < 2 {
                    return invalid("needs at least two training languages");
                }
            }
            ExperimentKind::Crosslingual => {
                if eval_languages.is_subset(&train_languages) {
                    return invalid("at least one eval language must be unseen in training");
                }
            }
        }
        Ok(Self {
            kind,
            train_languages,
            eval_languages,
            equalize_total: Self::DEFAULT_EQUALIZE_TOTAL,
        })
    }

    pub fn monolingual(language: LanguageTag) -> Self {
        Self::new(ExperimentKind::Monolingual, [language], [language]).expect("valid monolingual setup")
    }

    pub fn multilingual(languages: impl IntoIterator<Item = LanguageTag> + Clone) -> Result<Self, ExperimentError> {
        Self::new(ExperimentKind::Multilingual, languages.clone(), languages)
    }

    pub fn crosslingual(
        train: impl IntoIterator<Item = LanguageTag>,
        eval: impl IntoIterator<Item = LanguageTag>,
    ) -> Result<Self, ExperimentError> {
        Self::new(ExperimentKind::Crosslingual, train, eval)
    }

    pub fn with_equalize_total(mut self, total: usize) -> Self {
        self.equalize_total = total;
        self
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind
    }

    pub fn train_languages(&self) -> &BTreeSet<LanguageTag> {
        &self.train_languages
    }

    pub fn eval_languages(&self) -> &BTreeSet<LanguageTag> {
        &self.eval_languages
    }

    pub fn equalize_total(&self) -> usize {
        self.equalize_total
    }
}

/// The splits available for one language.
#[derive(Debug, Clone, Default)]
pub struct LanguageData {
    pub train: Option<Corpus>,
    pub dev: Option<Corpus>,
    pub test: Option<Corpus>,
}

/// Serializable state from which a backend can rebuild a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHandle {
    pub backend: String,
    pub state: serde_json::Value,
}

/// A fine-tuned model: a [`Detoxifier`] that can describe itself as a handle.
pub trait TrainedModel: Detoxifier {
    fn handle(&self) -> ModelHandle;
}

/// A seq2seq model family that can be fine-tuned on single-target pairs.
pub trait DetoxModelBackend {
    fn id(&self) -> String;

    fn fine_tune(&self, pairs: &[FlatPair], config: &TrainingConfig) -> Result<Box<dyn TrainedModel>, BackendError>;

    fn restore(&self, handle: &ModelHandle) -> Result<Box<dyn TrainedModel>, BackendError>;
}

/// Generates with a trained model and checks the output is aligned with the
/// input.
pub fn generate(
    model: &dyn TrainedModel,
    texts: &[String],
    language: LanguageTag,
) -> Result<Vec<String>, BackendError> {
    detoxify_aligned(model, texts, language)
}

/// Ignores training data and echoes its input.
#[derive(Debug, Clone, Copy, Default)]
pub struct CopyBackend;

#[derive(Debug, Clone, Copy)]
struct CopyModel;

impl Detoxifier for CopyModel {
    fn id(&self) -> String {
        "copy".into()
    }

    fn detoxify(&self, texts: &[String], _language: LanguageTag) -> Result<Vec<String>, BackendError> {
        Ok(texts.to_vec())
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

impl TrainedModel for CopyModel {
    fn handle(&self) -> ModelHandle {
        ModelHandle {
            backend: "copy".into(),
            state: serde_json::Value::Null,
        }
    }
}

impl DetoxModelBackend for CopyBackend {
    fn id(&self) -> String {
        "copy".into()
    }

    fn fine_tune(&self, _pairs: &[FlatPair], _config: &TrainingConfig) -> Result<Box<dyn TrainedModel>, BackendError> {
        Ok(Box::new(CopyModel))
    }

    fn restore(&self, _handle: &ModelHandle) -> Result<Box<dyn TrainedModel>, BackendError> {
        Ok(Box::new(CopyModel))
    }
}

/// "Trains" by loading the lexicon named in the `lexicon` backend option and
/// generates with the Delete baseline. `lexicon_language` sets the lexicon's
/// tag; by default it is the language of the first training pair.
#[derive(Debug, Clone, Default)]
pub struct LexiconDeleteBackend {
    lexicon: Option<ToxicLexicon>,
}

impl LexiconDeleteBackend {
    pub const ID: &'static str = "lexicon-delete";

    /// Uses an in-memory lexicon instead of the `lexicon` option.
    pub fn with_lexicon(lexicon: ToxicLexicon) -> Self {
        Self { lexicon: Some(lexicon) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LexiconState {
    language: LanguageTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lexicon_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<String>>,
}

struct LexiconDeleteModel {
    lexicon: ToxicLexicon,
    state: LexiconState,
}

impl Detoxifier for LexiconDeleteModel {
    fn id(&self) -> String {
        LexiconDeleteBackend::ID.into()
    }

    fn detoxify(&self, texts: &[String], _language: LanguageTag) -> Result<Vec<String>, BackendError> {
        Ok(texts.iter().map(|t| delete_detox(t, &self.lexicon).output).collect())
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

impl TrainedModel for LexiconDeleteModel {
    fn handle(&self) -> ModelHandle {
        ModelHandle {
            backend: LexiconDeleteBackend::ID.into(),
            state: serde_json::to_value(&self.state).expect("state serializes"),
        }
    }
}

impl LexiconDeleteModel {
    fn from_state(state: LexiconState) -> Result<Self, BackendError> {
        let id = LexiconDeleteBackend::ID;
        let lexicon = match (&state.lexicon_path, &state.entries) {
            (Some(path), _) => load_lexicon(path, state.language).map_err(|e| BackendError::config(id, e.to_string()))?,
            (None, Some(entries)) => {
                ToxicLexicon::new(state.language, entries).map_err(|e| BackendError::config(id, e.to_string()))?
            }
            (None, None) => return Err(BackendError::config(id, "no lexicon configured")),
        };
        Ok(Self { lexicon, state })
    }
}

impl DetoxModelBackend for LexiconDeleteBackend {
    fn id(&self) -> String {
        Self::ID.into()
    }

    fn fine_tune(&self, pairs: &[FlatPair], config: &TrainingConfig) -> Result<Box<dyn TrainedModel>, BackendError> {
        if let Some(lexicon) = &self.lexicon {
            let state = LexiconState {
                language: lexicon.language(),
                lexicon_path: None,
                entries: Some(lexicon.entries().map(str::to_string).collect()),
            };
            return Ok(Box::new(LexiconDeleteModel {
                lexicon: lexicon.clone(),
                state,
            }));
        }
        let path = config
            .backend_options
            .get("lexicon")
            .ok_or_else(|| BackendError::config(Self::ID, "missing `lexicon` backend option"))?;
        let language = match config.backend_options.get("lexicon_language") {
            Some(tag) => LanguageTag::new(tag).map_err(|e| BackendError::config(Self::ID, e.to_string()))?,
            None => pairs
                .first()
                .map(|p| p.language)
                .ok_or_else(|| BackendError::config(Self::ID, "cannot infer lexicon language without training pairs"))?,
        };
        let model = LexiconDeleteModel::from_state(LexiconState {
            language,
            lexicon_path: Some(path.clone()),
            entries: None,
        })?;
        Ok(Box::new(model))
    }

    fn restore(&self, handle: &ModelHandle) -> Result<Box<dyn TrainedModel>, BackendError> {
        let state: LexiconState = serde_json::from_value(handle.state.clone())
            .map_err(|e| BackendError::config(Self::ID, format!("bad handle: {e}")))?;
        Ok(Box::new(LexiconDeleteModel::from_state(state)?))
    }
}

/// The deterministic backends that ship with this crate.
pub fn reference_backends() -> Vec<Box<dyn DetoxModelBackend>> {
    vec![Box::new(CopyBackend), Box::new(LexiconDeleteBackend::default())]
}

/// Resolves a backend identifier. Identifiers other than the reference
/// backends name pretrained checkpoints, which this build cannot load.
pub fn backend_by_id(id: &str) -> Result<Box<dyn DetoxModelBackend>, BackendError> {
    match id {
        "copy" => Ok(Box::new(CopyBackend)),
        LexiconDeleteBackend::ID => Ok(Box::new(LexiconDeleteBackend::default())),
        other => {
            let cache = std::env::var(MODEL_CACHE_ENV).unwrap_or_else(|_| "<unset>".into());
            Err(BackendError::unavailable(
                other,
                format!("no pretrained seq2seq runtime is compiled in ({MODEL_CACHE_ENV}={cache})"),
            ))
        }
    }
}

/// The training material an experiment hands to its backend.
#[derive(Debug, Clone)]
pub struct TrainingData {
    /// Records before flattening (after equalization for multilingual runs).
    pub records: Corpus,
    pub pairs: Vec<FlatPair>,
}

fn split_for(
    corpora: &BTreeMap<LanguageTag, LanguageData>,
    language: LanguageTag,
    split: Split,
) -> Result<&Corpus, ExperimentError> {
    let data = corpora.get(&language);
    let corpus = match split {
        Split::Train => data.and_then(|d| d.train.as_ref()),
        Split::Dev => data.and_then(|d| d.dev.as_ref()),
        Split::Test => data.and_then(|d| d.test.as_ref()),
    };
    corpus.ok_or(ExperimentError::MissingSplit { language, split })
}

/// Builds the training set. Multilingual setups draw an equal number of
/// records per language and shuffle the flattened pairs with the config
/// seed; other setups concatenate the train splits in language order.
pub fn prepare_training_data(
    setup: &ExperimentSetup,
    corpora: &BTreeMap<LanguageTag, LanguageData>,
    config: &TrainingConfig,
) -> Result<TrainingData, ExperimentError> {
    let train: Vec<&Corpus> = setup
        .train_languages
        .iter()
        .map(|&l| split_for(corpora, l, Split::Train))
        .collect::<Result<_, _>>()?;
    match setup.kind {
        ExperimentKind::Multilingual => {
            let records = equalize_languages(&train, setup.equalize_total, config.seed)?;
            let mut pairs = flatten_references(&records);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(1);
            pairs.shuffle(&mut rng);
            Ok(TrainingData { records, pairs })
        }
        _ => {
            let records = Corpus::new(
                train.iter().flat_map(|c| c.records().iter().cloned()).collect(),
                Split::Train,
            );
            let pairs = flatten_references(&records);
            Ok(TrainingData { records, pairs })
        }
    }
}

fn join_languages(langs: &BTreeSet<LanguageTag>) -> String {
    langs.iter().map(LanguageTag::as_str).collect::<Vec<_>>().join("+")
}

/// `<backend>-<setup kind>-<train languages joined by +>`, e.g.
/// `lexicon-delete-crosslingual-en`.
pub fn experiment_system_id(backend_id: &str, setup: &ExperimentSetup) -> String {
    format!("{backend_id}-{}-{}", setup.kind, join_languages(&setup.train_languages))
}

/// Trains `backend` for `setup` and generates on every eval language's test
/// split. Returns one run per eval language.
pub fn run_experiment(
    setup: &ExperimentSetup,
    corpora: &BTreeMap<LanguageTag, LanguageData>,
    backend: &dyn DetoxModelBackend,
    config: &TrainingConfig,
) -> Result<BTreeMap<LanguageTag, SystemRun>, ExperimentError> {
    config.validate()?;
    for &language in &setup.eval_languages {
        split_for(corpora, language, Split::Test)?;
    }
    let data = prepare_training_data(setup, corpora, config)?;
    let model = backend.fine_tune(&data.pairs, config).map_err(|source| ExperimentError::Training {
        backend: backend.id(),
        source,
    })?;

    let system_id = experiment_system_id(&backend.id(), setup);
    let mut runs = BTreeMap::new();
    for &language in &setup.eval_languages {
        let inputs = split_for(corpora, language, Split::Test)?.toxic_texts();
        let started = RunManifest::new(&system_id, "seq2seq", backend.id());
        let outputs = generate(model.as_ref(), &inputs, language)
            .map_err(|source| ExperimentError::Generation { language, source })?;
        let mut manifest = started
            .detail("training_pairs", data.pairs.len())
            .detail("training_records", data.records.language_counts())
            .detail("handle", model.handle());
        manifest.seed = Some(config.seed);
        manifest.setup = Some(serde_json::to_value(setup).expect("setup serializes"));
        manifest.config = Some(serde_json::to_value(config).expect("config serializes"));
        let run = SystemRun::new(&system_id, language, inputs, outputs, manifest.finish())?;
        runs.insert(language, run);
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DetoxPair;

    fn corpus(texts: &[&str], language: LanguageTag, split: Split) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .map(|t| DetoxPair::new(*t, vec![format!("polite {t}")], language).unwrap())
                .collect(),
            split,
        )
    }

    fn data(texts: &[&str], language: LanguageTag) -> LanguageData {
        LanguageData {
            train: Some(corpus(texts, language, Split::Train)),
            dev: None,
            test: Some(corpus(texts, language, Split::Test)),
        }
    }

    #[test]
    fn config_defaults() {
        let mt5 = TrainingConfig::mt5(1);
        assert_eq!(mt5.learning_rate, 1e-4);
        assert_eq!((mt5.warmup_steps, mt5.batch_size, mt5.max_iterations), (500, 8, 40_000));
        mt5.validate().unwrap();
        for it in TrainingConfig::MBART_ITERATIONS {
            assert_eq!(TrainingConfig::mbart(it, 1).unwrap().max_iterations, it);
        }
        assert!(TrainingConfig::mbart(2_000, 1).is_err());
    }

    #[test]
    fn config_validation() {
        let base = TrainingConfig::mt5(0);
        assert!(TrainingConfig { learning_rate: 0.0, ..base.clone() }.validate().is_err());
        assert!(TrainingConfig { warmup_steps: 1_001, ..base.clone() }.validate().is_err());
        assert!(TrainingConfig { max_iterations: 100, ..base.clone() }.validate().is_err());
        assert!(TrainingConfig { batch_size: 0, ..base }.validate().is_err());
    }

    #[test]
    fn schedule_warms_up_then_decays() {
        let c = TrainingConfig {
            warmup_steps: 10,
            max_iterations: 110,
            ..TrainingConfig::mt5(0)
        };
        assert_eq!(c.learning_rate_at(0), 0.0);
        assert!((c.learning_rate_at(5) - 5e-5).abs() < 1e-18);
        assert!((c.learning_rate_at(10) - 1e-4).abs() < 1e-18);
        assert!((c.learning_rate_at(60) - 5e-5).abs() < 1e-18);
        assert_eq!(c.learning_rate_at(110), 0.0);
    }

    #[test]
    fn setup_invariants() {
        let (en, ru) = (LanguageTag::EN, LanguageTag::RU);
        assert!(ExperimentSetup::new(ExperimentKind::Monolingual, [en], [ru]).is_err());
        assert!(ExperimentSetup::new(ExperimentKind::Monolingual, [en, ru], [en, ru]).is_err());
        assert!(ExperimentSetup::multilingual([en]).is_err());
        assert!(ExperimentSetup::multilingual([en, ru]).is_ok());
        assert!(ExperimentSetup::crosslingual([en], [en]).is_err());
        assert!(ExperimentSetup::crosslingual([en], [ru, en]).is_ok());
        assert!("zero-shot".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn copy_backend_echoes() {
        let model = CopyBackend.fine_tune(&[], &TrainingConfig::mt5(0)).unwrap();
        let texts = vec!["a".to_string(), "b".to_string()];
        assert_eq!(generate(model.as_ref(), &texts, LanguageTag::EN).unwrap(), texts);
    }

    #[test]
    fn monolingual_copy_run() {
        let corpora = BTreeMap::from([(LanguageTag::EN, data(&["x y", "z"], LanguageTag::EN))]);
        let runs = run_experiment(
            &ExperimentSetup::monolingual(LanguageTag::EN),
            &corpora,
            &CopyBackend,
            &TrainingConfig::mt5(3),
        )
        .unwrap();
        let run = &runs[&LanguageTag::EN];
        assert_eq!(run.inputs(), run.outputs());
        assert_eq!(run.system_id(), "copy-monolingual-en");
        assert_eq!(run.manifest().seed, Some(3));
    }

    #[test]
    fn lexicon_delete_needs_lexicon() {
        let pairs = [FlatPair {
            toxic: "a".into(),
            reference: "b".into(),
            language: LanguageTag::EN,
        }];
        let err = LexiconDeleteBackend::default()
            .fine_tune(&pairs, &TrainingConfig::mt5(0))
            .err()
            .unwrap();
        assert!(matches!(err, BackendError::Config { .. }));
    }

    #[test]
    fn lexicon_delete_handle_restores() {
        let lexicon = ToxicLexicon::new(LanguageTag::EN, ["sh*t"]).unwrap();
        let model = LexiconDeleteBackend::with_lexicon(lexicon)
            .fine_tune(&[], &TrainingConfig::mt5(0))
            .unwrap();
        let restored = LexiconDeleteBackend::default().restore(&model.handle()).unwrap();
        let out = generate(restored.as_ref(), &["sh*t is crazy around here".into()], LanguageTag::EN).unwrap();
        assert_eq!(out, ["is crazy around here"]);
    }

    #[test]
    fn missing_split_is_reported() {
        let corpora = BTreeMap::from([(LanguageTag::EN, data(&["a"], LanguageTag::EN))]);
        let setup = ExperimentSetup::crosslingual([LanguageTag::EN], [LanguageTag::RU]).unwrap();
        let err = run_experiment(&setup, &corpora, &CopyBackend, &TrainingConfig::mt5(0)).unwrap_err();
        assert!(matches!(
            err,
            ExperimentError::MissingSplit {
                split: Split::Test,
                ..
            }
        ));
    }

    #[test]
    fn multilingual_equalizes_before_flattening() {
        let en: Vec<String> = (0..8).map(|i| format!("en {i}")).collect();
        let ru: Vec<String> = (0..6).map(|i| format!("ru {i}")).collect();
        fn to_refs(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        let corpora = BTreeMap::from([
            (LanguageTag::EN, data(&to_refs(&en), LanguageTag::EN)),
            (LanguageTag::RU, data(&to_refs(&ru), LanguageTag::RU)),
        ]);
        let setup = ExperimentSetup::multilingual([LanguageTag::EN, LanguageTag::RU])
            .unwrap()
            .with_equalize_total(10);
        let prepared = prepare_training_data(&setup, &corpora, &TrainingConfig::mt5(9)).unwrap();
        assert_eq!(prepared.records.language_counts()[&LanguageTag::EN], 5);
        assert_eq!(prepared.records.language_counts()[&LanguageTag::RU], 5);
        assert_eq!(prepared.pairs.len(), 10);
    }

    #[test]
    fn unknown_backend_is_unavailable() {
        assert!(matches!(
            backend_by_id("google/mt5-base"),
            Err(BackendError::Unavailable { .. })
        ));
        assert_eq!(reference_backends().len(), 2);
    }
}
