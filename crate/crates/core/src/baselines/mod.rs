//! Lexicon-driven baseline detoxifiers.
//!
//! * [`delete_detox`] drops every toxic word.
//! * [`condbert_detox`] masks every toxic word and lets a masked language
//!   model propose a non-toxic replacement, deleting the word when no
//!   candidate survives filtering.

mod condbert;
mod delete;

pub use condbert::{
    adapt_casing, condbert_detox, parse_mlm_script, CondBertConfig, CondBertDetoxifier,
    LexiconToxicity, MaskedLMBackend, MlmCandidate, ScriptedMaskedLM, TokenToxicity, DEFAULT_MASK,
};
pub use delete::{delete_detox, DeleteDetoxifier};

use thiserror::Error;

use crate::backend::BackendError;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid condBERT setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Outcome of detoxifying one sentence with a baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetoxResult {
    pub output: String,
    /// True iff `output` differs from the whitespace-normalized input.
    pub modified: bool,
    pub spans_handled: usize,
    /// Toxic words removed because no replacement survived (condBERT only).
    pub fallback_deletions: usize,
}

/// Trims and collapses every whitespace run to one space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl DetoxResult {
    fn new(input: &str, output: String, spans_handled: usize, fallback_deletions: usize) -> Self {
        let modified = output != normalize_whitespace(input);
        Self {
            output,
            modified,
            spans_handled,
            fallback_deletions,
        }
    }
}
