//! Contracts shared by every pluggable model: masked LMs, seq2seq
//! detoxifiers and translators all fail with [`BackendError`], and anything
//! that rewrites a batch of sentences implements [`Detoxifier`].

use thiserror::Error;

use crate::corpus::LanguageTag;

/// Environment variable naming the local model cache directory.
pub const MODEL_CACHE_ENV: &str = "MDETOX_MODEL_CACHE";

#[derive(Debug, Error)]
pub enum BackendError {
    /// The backend was used with missing or inconsistent settings.
    #[error("backend {backend}: configuration error: {message}")]
    Config { backend: String, message: String },
    /// The identifier names a model this build cannot load.
    #[error("backend {backend} is not available in this build: {message}")]
    Unavailable { backend: String, message: String },
    /// The backend returned something its contract forbids.
    #[error("backend {backend} violated its contract: {message}")]
    Contract { backend: String, message: String },
    #[error("backend {backend} failed: {message}")]
    Failed { backend: String, message: String },
}

impl BackendError {
    pub fn config(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub fn unavailable(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Unavailable {
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub fn contract(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Contract {
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub fn failed(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Failed {
            backend: backend.into(),
            message: message.into(),
        }
    }
}

/// Rewrites a batch of sentences in one language. Output `i` is the
/// rewrite of input `i`.
pub trait Detoxifier {
    fn id(&self) -> String;

    fn detoxify(&self, texts: &[String], language: LanguageTag) -> Result<Vec<String>, BackendError>;

    /// Whether concurrent calls on one instance are safe.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

/// Calls `detoxify` and rejects outputs whose length differs from the input.
pub fn detoxify_aligned(
    detoxifier: &dyn Detoxifier,
    texts: &[String],
    language: LanguageTag,
) -> Result<Vec<String>, BackendError> {
    let outputs = detoxifier.detoxify(texts, language)?;
    if outputs.len() != texts.len() {
        return Err(BackendError::contract(
            detoxifier.id(),
            format!("returned {} outputs for {} inputs", outputs.len(), texts.len()),
        ));
    }
    Ok(outputs)
}
