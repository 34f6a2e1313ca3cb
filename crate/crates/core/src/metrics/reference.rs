use std::collections::BTreeSet;

use crate::corpus::LanguageTag;
use crate::lexicon::{match_tokens, tokenize, ToxicLexicon};

use super::{ScorerError, ScorerSuite, SuiteModels};

const TERMINALS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 6] = ['"', '\'', ')', ']', '»', '”'];
const PAIRS: [(char, char); 4] = [('(', ')'), ('[', ']'), ('{', '}'), ('«', '»')];

/// Deterministic stand-ins for the external scorers:
///
/// * toxicity: share of tokens the lexicon matches (0 for empty text),
/// * similarity: Jaccard overlap of lowercased token sets,
/// * acceptability: 1 for non-empty text ending in `.`, `!`, `?` or `…`
///   with balanced brackets and quotes, otherwise 0.3,
/// * corruption: `1 − acceptability`.
#[derive(Debug, Clone)]
pub struct ReferenceSuite {
    lexicon: ToxicLexicon,
    language: LanguageTag,
}

impl ReferenceSuite {
    pub fn new(lexicon: ToxicLexicon) -> Self {
        let language = lexicon.language();
        Self { lexicon, language }
    }

    /// Scores text of another language with the same lexicon.
    pub fn with_language(mut self, language: LanguageTag) -> Self {
        self.language = language;
        self
    }
}

pub fn reference_scorer_suite(lexicon: ToxicLexicon) -> ReferenceSuite {
    ReferenceSuite::new(lexicon)
}

fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .map(|t| t.normalized())
        .filter(|t| !t.is_empty())
        .collect()
}

fn balanced(text: &str) -> bool {
    let mut depth = [0i64; PAIRS.len()];
    for c in text.chars() {
        for (i, (open, close)) in PAIRS.iter().enumerate() {
            if c == *open {
                depth[i] += 1;
            } else if c == *close {
                depth[i] -= 1;
                if depth[i] < 0 {
                    return false;
                }
            }
        }
    }
    depth.iter().all(|&d| d == 0) && text.chars().filter(|&c| c == '"').count() % 2 == 0
}

fn well_terminated(text: &str) -> bool {
    text.trim_end()
        .trim_end_matches(CLOSERS)
        .ends_with(TERMINALS)
}

impl ScorerSuite for ReferenceSuite {
    fn language(&self) -> LanguageTag {
        self.language
    }

    fn models(&self) -> SuiteModels {
        SuiteModels {
            toxicity_model: format!("reference:lexicon-share({} entries)", self.lexicon.len()),
            similarity_model: "reference:token-jaccard".into(),
            fluency_model: "reference:terminal-punctuation".into(),
        }
    }

    fn toxicity(&self, text: &str) -> Result<f64, ScorerError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Ok(0.0);
        }
        Ok(match_tokens(&tokens, &self.lexicon).len() as f64 / tokens.len() as f64)
    }

    fn similarity(&self, source: &str, generated: &str) -> Result<f64, ScorerError> {
        let a = token_set(source);
        let b = token_set(generated);
        let union = a.union(&b).count();
        if union == 0 {
            return Ok(1.0);
        }
        Ok(a.intersection(&b).count() as f64 / union as f64)
    }

    fn fluency_acceptability(&self, text: &str) -> Result<f64, ScorerError> {
        let fluent = !tokenize(text).is_empty() && well_terminated(text) && balanced(text);
        Ok(if fluent { 1.0 } else { 0.3 })
    }

    fn corruption(&self, text: &str) -> Result<f64, ScorerError> {
        Ok(1.0 - self.fluency_acceptability(text)?)
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn suite() -> ReferenceSuite {
        reference_scorer_suite(ToxicLexicon::new(LanguageTag::EN, ["sh*t"]).unwrap())
    }

    #[test]
    fn toxicity_is_matched_share() {
        let s = suite();
        assert!((s.toxicity("sh*t is crazy around here").unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(s.toxicity("").unwrap(), 0.0);
        assert_eq!(s.toxicity("shit shit").unwrap(), 1.0);
    }

    #[test]
    fn similarity_is_jaccard() {
        let s = suite();
        assert_eq!(s.similarity("a b c", "a b d").unwrap(), 0.5);
        assert_eq!(s.similarity("Same text.", "Same text.").unwrap(), 1.0);
        assert_eq!(s.similarity("same TEXT", "Same text!").unwrap(), 1.0);
        assert_eq!(s.similarity("", "").unwrap(), 1.0);
        assert_eq!(s.similarity("a", "").unwrap(), 0.0);
    }

    #[test]
    fn fluency_rule() {
        let s = suite();
        assert_eq!(s.fluency_acceptability("Delete the page.").unwrap(), 1.0);
        assert_eq!(s.fluency_acceptability("He said \"stop!\"").unwrap(), 1.0);
        assert_eq!(s.fluency_acceptability("(Fine.)").unwrap(), 1.0);
        assert_eq!(s.fluency_acceptability("no terminal").unwrap(), 0.3);
        assert_eq!(s.fluency_acceptability("(unbalanced.").unwrap(), 0.3);
        assert_eq!(s.fluency_acceptability("").unwrap(), 0.3);
        assert!((s.corruption("no terminal").unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn language_override() {
        assert_eq!(suite().with_language(LanguageTag::RU).language(), LanguageTag::RU);
    }
}
