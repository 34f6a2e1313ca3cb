//! Toxic vocabularies and word-level span matching.
//!
//! Entries are single words. An entry containing `*` is a pattern in which
//! each `*` stands for exactly one character, so `f*ck` matches `fuck` and
//! `f*ck` but neither `fck` nor `fucck`. Matching is case-insensitive and
//! ignores punctuation surrounding a word, never punctuation inside it.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::LanguageTag;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: entry {entry:?} contains whitespace")]
    Whitespace { line: usize, entry: String },
    #[error("line {line}: entry {entry:?} is empty after normalization")]
    Empty { line: usize, entry: String },
}

/// Characters stripped from the edges of a word. `*` is kept because it is
/// the censor character of masked profanity.
pub fn is_edge_punctuation(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace() && c != '*'
}

/// Lowercases a word and strips its surrounding punctuation.
pub fn normalize_word(word: &str) -> String {
    word.trim_matches(is_edge_punctuation).to_lowercase()
}

/// A per-language set of toxic words and `*` patterns.
#[derive(Debug, Clone)]
pub struct ToxicLexicon {
    language: LanguageTag,
    literals: HashSet<String>,
    // Patterns bucketed by their length in chars.
    patterns: HashMap<usize, Vec<Vec<char>>>,
    entries: BTreeSet<String>,
}

impl ToxicLexicon {
    /// Builds a lexicon from raw entries. Each entry is normalized; an entry
    /// with internal whitespace or nothing left after normalization is an
    /// error. Line numbers in errors are 1-based positions in `entries`.
    pub fn new<I, S>(language: LanguageTag, entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = Self {
            language,
            literals: HashSet::new(),
            patterns: HashMap::new(),
            entries: BTreeSet::new(),
        };
        for (i, entry) in entries.into_iter().enumerate() {
            lexicon.insert(entry.as_ref(), i + 1)?;
        }
        Ok(lexicon)
    }

    fn insert(&mut self, raw: &str, line: usize) -> Result<(), LexiconError> {
        let trimmed = raw.trim();
        if trimmed.contains(char::is_whitespace) {
            return Err(LexiconError::Whitespace {
                line,
                entry: trimmed.to_string(),
            });
        }
        let entry = normalize_word(trimmed);
        if entry.is_empty() {
            return Err(LexiconError::Empty {
                line,
                entry: trimmed.to_string(),
            });
        }
        if !self.entries.insert(entry.clone()) {
            return Ok(());
        }
        if entry.contains('*') {
            let chars: Vec<char> = entry.chars().collect();
            self.patterns.entry(chars.len()).or_default().push(chars);
        } else {
            self.literals.insert(entry);
        }
        Ok(())
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }

    /// Normalized entries in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether an already-normalized word is toxic.
    pub fn matches_normalized(&self, word: &str) -> bool {
        if word.is_empty() {
            return false;
        }
        if self.literals.contains(word) {
            return true;
        }
        let chars: Vec<char> = word.chars().collect();
        self.patterns.get(&chars.len()).is_some_and(|patterns| {
            patterns
                .iter()
                .any(|p| p.iter().zip(&chars).all(|(pc, wc)| *pc == '*' || pc == wc))
        })
    }

    /// Whether a raw word (any casing, optional surrounding punctuation)
    /// is toxic.
    pub fn contains_word(&self, word: &str) -> bool {
        self.matches_normalized(&normalize_word(word))
    }
}

/// Loads a lexicon file: one entry per line, blank lines and lines starting
/// with `#` are skipped.
pub fn load_lexicon(
    path: impl AsRef<Path>,
    language: LanguageTag,
) -> Result<ToxicLexicon, LexiconError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_lexicon(&content, language)
}

pub fn parse_lexicon(content: &str, language: LanguageTag) -> Result<ToxicLexicon, LexiconError> {
    let mut lexicon = ToxicLexicon::new(language, std::iter::empty::<&str>())?;
    for (i, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lexicon.insert(trimmed, i + 1)?;
    }
    Ok(lexicon)
}

/// A whitespace-delimited token split into leading punctuation, core and
/// trailing punctuation. `start..end` is its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub leading: String,
    pub core: String,
    pub trailing: String,
}

impl Token {
    fn from_surface(surface: &str, start: usize) -> Self {
        let core_start = surface
            .find(|c: char| !is_edge_punctuation(c))
            .unwrap_or(surface.len());
        let core_end = surface[core_start..]
            .rfind(|c: char| !is_edge_punctuation(c))
            .map(|i| {
                let c = surface[core_start + i..].chars().next().expect("char at index");
                core_start + i + c.len_utf8()
            })
            .unwrap_or(core_start);
        Self {
            start,
            end: start + surface.len(),
            leading: surface[..core_start].to_string(),
            core: surface[core_start..core_end].to_string(),
            trailing: surface[core_end..].to_string(),
        }
    }

    /// The token exactly as it appears in the text.
    pub fn surface(&self) -> String {
        format!("{}{}{}", self.leading, self.core, self.trailing)
    }

    /// Lowercased core used for lexicon lookups.
    pub fn normalized(&self) -> String {
        self.core.to_lowercase()
    }
}

/// Splits text on whitespace. Concatenating each token's surface with the
/// original inter-token whitespace reproduces the input.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token::from_surface(&text[s..i], s));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token::from_surface(&text[s..], s));
    }
    tokens
}

/// A run of toxic tokens, `start_token..end_token`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub start_token: usize,
    pub end_token: usize,
    pub surface: String,
}

/// Single-token spans over the tokens that match the lexicon.
pub fn match_tokens(tokens: &[Token], lexicon: &ToxicLexicon) -> Vec<TokenSpan> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, token)| lexicon.matches_normalized(&token.normalized()))
        .map(|(i, token)| TokenSpan {
            start_token: i,
            end_token: i + 1,
            surface: token.core.clone(),
        })
        .collect()
}

/// Finds toxic word spans in `text`. Spans are sorted and never overlap.
pub fn match_spans(text: &str, lexicon: &ToxicLexicon) -> Vec<TokenSpan> {
    match_tokens(&tokenize(text), lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(entries: &[&str]) -> ToxicLexicon {
        ToxicLexicon::new(LanguageTag::EN, entries).unwrap()
    }

    #[test]
    fn load_normalizes_and_skips_comments() {
        let lexicon = parse_lexicon("F*CK\nidiot\n# comment\n\n", LanguageTag::EN).unwrap();
        assert_eq!(lexicon.entries().collect::<Vec<_>>(), ["f*ck", "idiot"]);
    }

    #[test]
    fn duplicates_collapse() {
        let lexicon = parse_lexicon("idiot\nIdiot\n", LanguageTag::EN).unwrap();
        assert_eq!(lexicon.len(), 1);
    }

    #[test]
    fn internal_whitespace_is_rejected() {
        assert!(matches!(
            parse_lexicon("ok\ntwo words\n", LanguageTag::EN),
            Err(LexiconError::Whitespace { line: 2, .. })
        ));
    }

    #[test]
    fn surrounding_punctuation_is_stripped() {
        let lexicon = parse_lexicon("\"idiot!\"\n", LanguageTag::EN).unwrap();
        assert_eq!(lexicon.entries().collect::<Vec<_>>(), ["idiot"]);
        assert!(matches!(
            parse_lexicon("?!\n", LanguageTag::EN),
            Err(LexiconError::Empty { line: 1, .. })
        ));
    }

    #[test]
    fn missing_lexicon_file() {
        assert!(matches!(
            load_lexicon("/nonexistent/lexicon.txt", LanguageTag::EN),
            Err(LexiconError::Io { .. })
        ));
    }

    #[test]
    fn tokenize_question() {
        let tokens = tokenize("What is your problem?");
        let cores: Vec<&str> = tokens.iter().map(|t| t.core.as_str()).collect();
        assert_eq!(cores, ["What", "is", "your", "problem"]);
        assert_eq!(tokens[3].trailing, "?");
        assert!(tokens[..3].iter().all(|t| t.trailing.is_empty()));
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t ").is_empty());
    }

    #[test]
    fn tokenize_keeps_censor_star() {
        let tokens = tokenize("sh*t,");
        assert_eq!(tokens[0].core, "sh*t");
        assert_eq!(tokens[0].trailing, ",");
        let tokens = tokenize("(f***)");
        assert_eq!(tokens[0].leading, "(");
        assert_eq!(tokens[0].core, "f***");
        assert_eq!(tokens[0].trailing, ")");
    }

    #[test]
    fn tokenize_offsets_cover_cyrillic() {
        let text = "Х*рню всякую пишут,из-за этого лайка.";
        for token in tokenize(text) {
            assert_eq!(&text[token.start..token.end], token.surface());
        }
    }

    #[test]
    fn punctuation_only_token_has_empty_core() {
        let tokens = tokenize("well ...");
        assert_eq!(tokens[1].core, "");
        assert_eq!(tokens[1].leading, "...");
    }

    #[test]
    fn matches_appendix_sentence() {
        let spans = match_spans("sh*t is crazy around here", &lex(&["sh*t"]));
        assert_eq!(
            spans,
            [TokenSpan {
                start_token: 0,
                end_token: 1,
                surface: "sh*t".into()
            }]
        );
    }

    #[test]
    fn no_match_is_empty() {
        assert!(match_spans("Delete the page.", &lex(&["sh*t"])).is_empty());
    }

    #[test]
    fn wildcard_is_exactly_one_char() {
        let lexicon = lex(&["f*ck"]);
        assert!(lexicon.contains_word("fuck"));
        assert!(lexicon.contains_word("FUCK!"));
        assert!(lexicon.contains_word("f*ck"));
        assert!(!lexicon.contains_word("fck"));
        assert!(!lexicon.contains_word("fucck"));
        assert!(!lexicon.contains_word("duck"));
    }

    #[test]
    fn internal_punctuation_is_not_ignored() {
        let lexicon = lex(&["shit"]);
        assert!(lexicon.contains_word("shit,"));
        assert!(!lexicon.contains_word("s.h.i.t"));
    }

    #[test]
    fn matching_ignores_case() {
        let lexicon = lex(&["bullshit"]);
        assert_eq!(match_spans("BULLSHIT. Bullshit bullshit", &lexicon).len(), 3);
    }
}
