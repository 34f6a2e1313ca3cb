//! Cross-lingual detoxification through a pivot language: translate into
//! the pivot, detoxify there, translate back.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, Detoxifier};
use crate::corpus::LanguageTag;

/// Endpoint of a remote translation service.
pub const TRANSLATOR_ENDPOINT_ENV: &str = "MDETOX_TRANSLATOR_ENDPOINT";
/// Credential for the remote translation service.
pub const TRANSLATOR_API_KEY_ENV: &str = "MDETOX_TRANSLATOR_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hop {
    /// source → pivot
    Forward,
    /// pivot → source
    Backward,
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hop::Forward => "forward",
            Hop::Backward => "backward",
        })
    }
}

#[derive(Debug, Error)]
pub enum BacktranslationError {
    #[error("source and pivot are both {0}")]
    SamePivot(LanguageTag),
    #[error("batch size must be positive")]
    InvalidBatchSize,
    #[error("{hop} translation failed: {source}")]
    Translator {
        hop: Hop,
        #[source]
        source: BackendError,
    },
    #[error("pivot detoxification failed: {0}")]
    Detoxifier(#[source] BackendError),
    #[error("{stage} returned {got} texts for {expected} inputs")]
    Alignment {
        stage: String,
        expected: usize,
        got: usize,
    },
}

/// Machine translation between two languages. Output `i` translates input
/// `i`; an empty batch yields an empty batch.
pub trait TranslatorBackend {
    fn id(&self) -> String;

    fn translate(
        &self,
        texts: &[String],
        source: LanguageTag,
        target: LanguageTag,
    ) -> Result<Vec<String>, BackendError>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl TranslatorBackend for IdentityTranslator {
    fn id(&self) -> String {
        "identity".into()
    }

    fn translate(&self, texts: &[String], _: LanguageTag, _: LanguageTag) -> Result<Vec<String>, BackendError> {
        Ok(texts.to_vec())
    }
}

/// Looks translations up in a fixed table; unknown sentences are an error.
///
/// The file form is TSV with four columns:
/// `source_lang \t target_lang \t source_text \t target_text`.
#[derive(Debug, Clone, Default)]
pub struct StubTranslator {
    table: HashMap<(LanguageTag, LanguageTag, String), String>,
}

impl StubTranslator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, source: LanguageTag, target: LanguageTag, text: &str, translation: &str) -> Self {
        self.table.insert((source, target, text.to_string()), translation.to_string());
        self
    }

    pub fn parse(content: &str) -> Result<Self, BackendError> {
        let mut stub = Self::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| BackendError::config("stub", format!("mapping line {}: {m}", i + 1));
            let cells: Vec<&str> = line.split('\t').collect();
            let [src, tgt, text, translation] = cells[..] else {
                return Err(bad(format!("expected 4 columns, found {}", cells.len())));
            };
            let src = LanguageTag::new(src).map_err(|e| bad(e.to_string()))?;
            let tgt = LanguageTag::new(tgt).map_err(|e| bad(e.to_string()))?;
            stub = stub.with(src, tgt, text, translation);
        }
        Ok(stub)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let content =
            fs::read_to_string(path).map_err(|e| BackendError::config("stub", format!("{}: {e}", path.display())))?;
        Self::parse(&content)
    }
}

impl TranslatorBackend for StubTranslator {
    fn id(&self) -> String {
        "stub".into()
    }

    fn translate(
        &self,
        texts: &[String],
        source: LanguageTag,
        target: LanguageTag,
    ) -> Result<Vec<String>, BackendError> {
        texts
            .iter()
            .map(|t| {
                self.table
                    .get(&(source, target, t.clone()))
                    .cloned()
                    .ok_or_else(|| BackendError::failed("stub", format!("no {source}->{target} entry for {t:?}")))
            })
            .collect()
    }
}

/// Resolves a translator identifier: `identity`, `stub:<mapping.tsv>`, or
/// a remote service, which needs [`TRANSLATOR_ENDPOINT_ENV`] and is not
/// compiled into this build.
pub fn translator_by_id(id: &str) -> Result<Box<dyn TranslatorBackend>, BackendError> {
    if id == "identity" {
        return Ok(Box::new(IdentityTranslator));
    }
    if let Some(path) = id.strip_prefix("stub:") {
        return Ok(Box::new(StubTranslator::from_file(path)?));
    }
    match std::env::var(TRANSLATOR_ENDPOINT_ENV) {
        Err(_) => Err(BackendError::config(
            id,
            format!("remote translators need {TRANSLATOR_ENDPOINT_ENV} (and usually {TRANSLATOR_API_KEY_ENV})"),
        )),
        Ok(endpoint) => Err(BackendError::unavailable(
            id,
            format!("no HTTP translator client is compiled in (endpoint {endpoint})"),
        )),
    }
}

/// What happened to one sentence on its way through the pivot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub pivot: String,
    pub detoxed_pivot: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktranslationOutput {
    pub outputs: Vec<String>,
    pub provenance: Vec<Provenance>,
    pub source: LanguageTag,
    pub pivot: LanguageTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BacktranslationConfig {
    /// Maximum number of sentences per translator call.
    pub batch_size: usize,
}

impl Default for BacktranslationConfig {
    fn default() -> Self {
        Self { batch_size: 32 }
    }
}

fn check_len(stage: &str, expected: usize, got: usize) -> Result<(), BacktranslationError> {
    if expected == got {
        Ok(())
    } else {
        Err(BacktranslationError::Alignment {
            stage: stage.to_string(),
            expected,
            got,
        })
    }
}

fn translate_batched(
    translator: &dyn TranslatorBackend,
    texts: &[String],
    source: LanguageTag,
    target: LanguageTag,
    batch_size: usize,
    hop: Hop,
) -> Result<Vec<String>, BacktranslationError> {
    let mut out = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(batch_size) {
        let translated = translator
            .translate(chunk, source, target)
            .map_err(|source| BacktranslationError::Translator { hop, source })?;
        check_len(&format!("{hop} translation"), chunk.len(), translated.len())?;
        out.extend(translated);
    }
    Ok(out)
}

/// Translates `texts` from `source` into `pivot`, detoxifies them there and
/// translates the result back. Failures are not retried.
pub fn backtranslate_detox(
    texts: &[String],
    source: LanguageTag,
    pivot: LanguageTag,
    translator: &dyn TranslatorBackend,
    detoxifier: &dyn Detoxifier,
    config: &BacktranslationConfig,
) -> Result<BacktranslationOutput, BacktranslationError> {
    if source == pivot {
        return Err(BacktranslationError::SamePivot(source));
    }
    if config.batch_size == 0 {
        return Err(BacktranslationError::InvalidBatchSize);
    }
    let pivots = translate_batched(translator, texts, source, pivot, config.batch_size, Hop::Forward)?;
    let detoxed = detoxifier
        .detoxify(&pivots, pivot)
        .map_err(BacktranslationError::Detoxifier)?;
    check_len("pivot detoxification", pivots.len(), detoxed.len())?;
    let outputs = translate_batched(translator, &detoxed, pivot, source, config.batch_size, Hop::Backward)?;
    let provenance = pivots
        .into_iter()
        .zip(detoxed)
        .map(|(pivot, detoxed_pivot)| Provenance { pivot, detoxed_pivot })
        .collect();
    Ok(BacktranslationOutput {
        outputs,
        provenance,
        source,
        pivot,
    })
}
