use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::backend::{BackendError, Detoxifier};
use crate::corpus::LanguageTag;
use crate::lexicon::{match_tokens, tokenize, ToxicLexicon};

use super::{BaselineError, DetoxResult};

pub const DEFAULT_MASK: &str = "<mask>";

/// One replacement proposed by a masked LM.
#[derive(Debug, Clone, PartialEq)]
pub struct MlmCandidate {
    pub token: String,
    pub score: f64,
}

impl MlmCandidate {
    pub fn new(token: impl Into<String>, score: f64) -> Self {
        Self {
            token: token.into(),
            score,
        }
    }
}

/// A masked language model that fills a single mask.
///
/// `masked_text` contains the mask token exactly once, at whitespace token
/// index `position`. Candidates must be single tokens without whitespace,
/// ranked by non-increasing score.
pub trait MaskedLMBackend {
    fn id(&self) -> String;

    fn mask_token(&self) -> &str {
        DEFAULT_MASK
    }

    fn fill(&self, masked_text: &str, position: usize, k: usize)
        -> Result<Vec<MlmCandidate>, BackendError>;
}

/// Toxicity of a single candidate word, in `[0, 1]`.
pub trait TokenToxicity {
    fn toxicity(&self, token: &str) -> f64;
}

impl<F: Fn(&str) -> f64> TokenToxicity for F {
    fn toxicity(&self, token: &str) -> f64 {
        self(token)
    }
}

/// Scores a word 1 if the lexicon contains it and 0 otherwise.
#[derive(Debug, Clone)]
pub struct LexiconToxicity(pub ToxicLexicon);

impl TokenToxicity for LexiconToxicity {
    fn toxicity(&self, token: &str) -> f64 {
        if self.0.contains_word(token) {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondBertConfig {
    /// Number of candidates requested per mask.
    pub k: usize,
    /// Candidates scoring strictly above this toxicity are discarded.
    pub tox_threshold: f64,
}

impl Default for CondBertConfig {
    fn default() -> Self {
        Self {
            k: 10,
            tox_threshold: 0.5,
        }
    }
}

impl CondBertConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.k == 0 {
            return Err(BaselineError::InvalidConfig("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tox_threshold) {
            return Err(BaselineError::InvalidConfig(format!(
                "toxicity threshold {} outside [0, 1]",
                self.tox_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Casing {
    Lower,
    Capitalized,
    Upper,
    Other,
}

fn casing_of(word: &str) -> Casing {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    let Some(first) = letters.first() else {
        return Casing::Other;
    };
    let upper = letters.iter().filter(|c| c.is_uppercase()).count();
    if upper == 0 {
        Casing::Lower
    } else if upper == letters.len() && letters.len() >= 2 {
        Casing::Upper
    } else if first.is_uppercase() && upper == 1 {
        Casing::Capitalized
    } else {
        Casing::Other
    }
}

/// Gives `candidate` the casing pattern of `original`: all-lower,
/// Capitalized or ALL-CAPS. Mixed patterns leave the candidate as is.
pub fn adapt_casing(candidate: &str, original: &str) -> String {
    match casing_of(original) {
        Casing::Lower => candidate.to_lowercase(),
        Casing::Upper => candidate.to_uppercase(),
        Casing::Capitalized => {
            let mut chars = candidate.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars.as_str().to_lowercase().chars()).collect(),
                None => String::new(),
            }
        }
        Casing::Other => candidate.to_string(),
    }
}

fn check_candidates(backend: &str, candidates: &[MlmCandidate]) -> Result<(), BackendError> {
    for c in candidates {
        if c.token.is_empty() || c.token.contains(char::is_whitespace) {
            return Err(BackendError::contract(
                backend,
                format!("candidate {:?} is not a single token", c.token),
            ));
        }
        if c.score.is_nan() {
            return Err(BackendError::contract(backend, "candidate score is NaN"));
        }
    }
    if candidates.windows(2).any(|w| w[1].score > w[0].score) {
        return Err(BackendError::contract(backend, "candidate scores are not ranked"));
    }
    Ok(())
}

/// Replaces toxic words one at a time, left to right.
///
/// Each toxic word is masked in the sentence as rewritten so far, so earlier
/// replacements condition later fills. Candidates in the lexicon or with
/// toxicity above the threshold are dropped; the best survivor takes the
/// original word's casing and punctuation. If nothing survives the word is
/// deleted. A backend error aborts the whole sentence.
pub fn condbert_detox(
    text: &str,
    lexicon: &ToxicLexicon,
    mlm: &dyn MaskedLMBackend,
    toxicity: &dyn TokenToxicity,
    config: &CondBertConfig,
) -> Result<DetoxResult, BaselineError> {
    config.validate()?;
    let tokens = tokenize(text);
    let spans = match_tokens(&tokens, lexicon);
    let mut current: Vec<Option<String>> = tokens.iter().map(|t| Some(t.surface())).collect();
    let mut fallback_deletions = 0;

    for span in &spans {
        let index = span.start_token;
        let token = &tokens[index];
        let position = current[..index].iter().filter(|s| s.is_some()).count();
        let masked = current
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                if i == index {
                    Some(format!("{}{}{}", token.leading, mlm.mask_token(), token.trailing))
                } else {
                    s.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ");

        let mut candidates = mlm.fill(&masked, position, config.k)?;
        check_candidates(&mlm.id(), &candidates)?;
        candidates.truncate(config.k);

        let replacement = candidates.iter().find(|c| {
            !lexicon.contains_word(&c.token) && toxicity.toxicity(&c.token) <= config.tox_threshold
        });
        current[index] = match replacement {
            Some(c) => Some(format!(
                "{}{}{}",
                token.leading,
                adapt_casing(&c.token, &token.core),
                token.trailing
            )),
            None => {
                fallback_deletions += 1;
                None
            }
        };
    }

    let output = current.into_iter().flatten().collect::<Vec<_>>().join(" ");
    Ok(DetoxResult::new(text, output, spans.len(), fallback_deletions))
}

/// A masked LM that replays scripted answers keyed by the exact masked text.
/// Unknown inputs get an empty candidate list.
#[derive(Debug, Clone, Default)]
pub struct ScriptedMaskedLM {
    responses: HashMap<String, Vec<MlmCandidate>>,
}

impl ScriptedMaskedLM {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_response(mut self, masked_text: impl Into<String>, candidates: Vec<MlmCandidate>) -> Self {
        self.responses.insert(masked_text.into(), candidates);
        self
    }

    /// Reads a script file; see [`parse_mlm_script`].
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let content = fs::read_to_string(path)
            .map_err(|e| BackendError::config("stub", format!("{}: {e}", path.display())))?;
        parse_mlm_script(&content)
    }
}

/// Parses `masked text \t cand1 \t score1 [\t cand2 \t score2 ...]` lines.
/// Blank lines and `#` comments are skipped.
pub fn parse_mlm_script(content: &str) -> Result<ScriptedMaskedLM, BackendError> {
    let mut script = ScriptedMaskedLM::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() % 2 != 1 {
            return Err(BackendError::config(
                "stub",
                format!("script line {}: expected candidate/score pairs", i + 1),
            ));
        }
        let mut candidates = Vec::new();
        for pair in cells[1..].chunks(2) {
            let score = pair[1].trim().parse::<f64>().map_err(|e| {
                BackendError::config("stub", format!("script line {}: bad score: {e}", i + 1))
            })?;
            candidates.push(MlmCandidate::new(pair[0], score));
        }
        script.responses.insert(cells[0].to_string(), candidates);
    }
    Ok(script)
}

impl MaskedLMBackend for ScriptedMaskedLM {
    fn id(&self) -> String {
        "stub".to_string()
    }

    fn fill(&self, masked_text: &str, _position: usize, _k: usize) -> Result<Vec<MlmCandidate>, BackendError> {
        Ok(self.responses.get(masked_text).cloned().unwrap_or_default())
    }
}

/// CondBERT as a batch [`Detoxifier`].
pub struct CondBertDetoxifier {
    lexicon: ToxicLexicon,
    mlm: Box<dyn MaskedLMBackend>,
    toxicity: Box<dyn TokenToxicity>,
    config: CondBertConfig,
}

impl CondBertDetoxifier {
    pub fn new(
        lexicon: ToxicLexicon,
        mlm: Box<dyn MaskedLMBackend>,
        toxicity: Box<dyn TokenToxicity>,
        config: CondBertConfig,
    ) -> Result<Self, BaselineError> {
        config.validate()?;
        Ok(Self {
            lexicon,
            mlm,
            toxicity,
            config,
        })
    }

    pub fn detox_one(&self, text: &str) -> Result<DetoxResult, BaselineError> {
        condbert_detox(text, &self.lexicon, self.mlm.as_ref(), self.toxicity.as_ref(), &self.config)
    }
}

impl Detoxifier for CondBertDetoxifier {
    fn id(&self) -> String {
        format!("condbert:{}", self.mlm.id())
    }

    fn detoxify(&self, texts: &[String], _language: LanguageTag) -> Result<Vec<String>, BackendError> {
        texts
            .iter()
            .map(|t| match self.detox_one(t) {
                Ok(r) => Ok(r.output),
                Err(BaselineError::Backend(e)) => Err(e),
                Err(e) => Err(BackendError::config(self.id(), e.to_string())),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(entries: &[&str]) -> ToxicLexicon {
        ToxicLexicon::new(LanguageTag::EN, entries).unwrap()
    }

    struct Failing;

    impl MaskedLMBackend for Failing {
        fn id(&self) -> String {
            "failing".into()
        }
        fn fill(&self, _: &str, _: usize, _: usize) -> Result<Vec<MlmCandidate>, BackendError> {
            Err(BackendError::failed("failing", "boom"))
        }
    }

    #[test]
    fn replaces_with_first_survivor() {
        let lexicon = lex(&["bullshit"]);
        let mlm = ScriptedMaskedLM::new().with_response(
            "This whole article is <mask>.",
            vec![MlmCandidate::new("bad", 0.9), MlmCandidate::new("nonsense", 0.8)],
        );
        let tox = LexiconToxicity(lexicon.clone());
        let r = condbert_detox(
            "This whole article is bullshit.",
            &lexicon,
            &mlm,
            &tox,
            &CondBertConfig::default(),
        )
        .unwrap();
        assert_eq!(r.output, "This whole article is bad.");
        assert!(r.modified);
        assert_eq!((r.spans_handled, r.fallback_deletions), (1, 0));
    }

    #[test]
    fn no_spans_is_identity() {
        let lexicon = lex(&["bullshit"]);
        let r = condbert_detox(
            "Delete the page.",
            &lexicon,
            &Failing,
            &LexiconToxicity(lexicon.clone()),
            &CondBertConfig::default(),
        )
        .unwrap();
        assert_eq!(r.output, "Delete the page.");
        assert!(!r.modified);
    }

    #[test]
    fn falls_back_to_deletion() {
        let lexicon = lex(&["bullshit", "crap"]);
        let mlm = ScriptedMaskedLM::new().with_response(
            "This whole article is <mask>.",
            vec![MlmCandidate::new("crap", 0.9), MlmCandidate::new("bullshit", 0.5)],
        );
        let r = condbert_detox(
            "This whole article is bullshit.",
            &lexicon,
            &mlm,
            &LexiconToxicity(lexicon.clone()),
            &CondBertConfig::default(),
        )
        .unwrap();
        assert_eq!(r.output, "This whole article is");
        assert_eq!(r.fallback_deletions, 1);
    }

    #[test]
    fn backend_failure_aborts() {
        let lexicon = lex(&["bullshit"]);
        let err = condbert_detox(
            "bullshit",
            &lexicon,
            &Failing,
            &LexiconToxicity(lexicon.clone()),
            &CondBertConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, BaselineError::Backend(BackendError::Failed { .. })));
    }

    #[test]
    fn multi_word_candidate_violates_contract() {
        let lexicon = lex(&["bullshit"]);
        let mlm = ScriptedMaskedLM::new().with_response("<mask>", vec![MlmCandidate::new("not good", 0.5)]);
        let err = condbert_detox(
            "bullshit",
            &lexicon,
            &mlm,
            &LexiconToxicity(lexicon.clone()),
            &CondBertConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, BaselineError::Backend(BackendError::Contract { .. })));
    }

    #[test]
    fn unranked_scores_violate_contract() {
        let lexicon = lex(&["bullshit"]);
        let mlm = ScriptedMaskedLM::new().with_response(
            "<mask>",
            vec![MlmCandidate::new("a", 0.1), MlmCandidate::new("b", 0.5)],
        );
        assert!(condbert_detox(
            "bullshit",
            &lexicon,
            &mlm,
            &LexiconToxicity(lexicon.clone()),
            &CondBertConfig::default()
        )
        .is_err());
    }

    #[test]
    fn config_is_validated() {
        assert!(CondBertConfig { k: 0, tox_threshold: 0.5 }.validate().is_err());
        assert!(CondBertConfig { k: 3, tox_threshold: 1.5 }.validate().is_err());
        assert!(CondBertConfig { k: 3, tox_threshold: 1.0 }.validate().is_ok());
    }

    #[test]
    fn casing_patterns() {
        assert_eq!(adapt_casing("Nonsense", "bullshit"), "nonsense");
        assert_eq!(adapt_casing("nonsense", "Bullshit"), "Nonsense");
        assert_eq!(adapt_casing("nonsense", "BULLSHIT"), "NONSENSE");
        assert_eq!(adapt_casing("darn", "F*CK"), "DARN");
        assert_eq!(adapt_casing("stuff", "Х*рню"), "Stuff");
        assert_eq!(adapt_casing("stuff", "x"), "stuff");
        assert_eq!(adapt_casing("Stuff", "iDiot"), "Stuff");
    }

    #[test]
    fn script_parsing() {
        let script = parse_mlm_script("# header\nis <mask>.\tbad\t0.9\tgood\t0.1\n\n<mask>\n").unwrap();
        assert_eq!(
            script.fill("is <mask>.", 1, 10).unwrap(),
            vec![MlmCandidate::new("bad", 0.9), MlmCandidate::new("good", 0.1)]
        );
        assert!(script.fill("<mask>", 0, 10).unwrap().is_empty());
        assert!(script.fill("unknown", 0, 10).unwrap().is_empty());
        assert!(parse_mlm_script("x\tbad\n").is_err());
        assert!(parse_mlm_script("x\tbad\tnot-a-number\n").is_err());
    }
}
