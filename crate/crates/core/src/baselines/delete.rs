use crate::backend::{BackendError, Detoxifier};
use crate::corpus::LanguageTag;
use crate::lexicon::{match_tokens, tokenize, ToxicLexicon};

use super::DetoxResult;

/// Removes every lexicon-matched token together with its punctuation and
/// joins what is left with single spaces. Idempotent.
pub fn delete_detox(text: &str, lexicon: &ToxicLexicon) -> DetoxResult {
    let tokens = tokenize(text);
    let spans = match_tokens(&tokens, lexicon);
    let mut toxic = vec![false; tokens.len()];
    for span in &spans {
        toxic[span.start_token..span.end_token].fill(true);
    }
    let output = tokens
        .iter()
        .zip(&toxic)
        .filter(|(_, &is_toxic)| !is_toxic)
        .map(|(token, _)| token.surface())
        .collect::<Vec<_>>()
        .join(" ");
    DetoxResult::new(text, output, spans.len(), 0)
}

/// The Delete baseline as a batch [`Detoxifier`].
#[derive(Debug, Clone)]
pub struct DeleteDetoxifier {
    lexicon: ToxicLexicon,
}

impl DeleteDetoxifier {
    pub fn new(lexicon: ToxicLexicon) -> Self {
        Self { lexicon }
    }

    pub fn lexicon(&self) -> &ToxicLexicon {
        &self.lexicon
    }
}

impl Detoxifier for DeleteDetoxifier {
    fn id(&self) -> String {
        "delete".to_string()
    }

    fn detoxify(&self, texts: &[String], _language: LanguageTag) -> Result<Vec<String>, BackendError> {
        Ok(texts
            .iter()
            .map(|t| delete_detox(t, &self.lexicon).output)
            .collect())
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}
