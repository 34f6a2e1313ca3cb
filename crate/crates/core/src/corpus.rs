//! Parallel detoxification corpora.
//!
//! A corpus file is UTF-8 TSV without a header. Every row holds one toxic
//! sentence followed by one or more polite paraphrases:
//!
//! ```text
//! toxic \t ref1 [\t ref2 ...]
//! ```
//!
//! Rows are kept as is: nothing is merged, deduplicated or normalized here.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading or resampling corpora.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid language tag {0:?}: expected two lowercase ASCII letters")]
    InvalidLanguage(String),
    #[error("invalid split label {0:?}: expected train, dev or test")]
    InvalidSplit(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file contains no rows")]
    EmptyFile { path: PathBuf },
    #[error("row {row}: expected at least 2 tab-separated columns, found {found}")]
    MissingColumns { row: usize, found: usize },
    #[error("row {row}: column {column} is empty")]
    EmptyCell { row: usize, column: usize },
    #[error("a detox pair needs a non-empty toxic text")]
    EmptyToxic,
    #[error("a detox pair needs at least one non-empty reference")]
    EmptyReference,
    #[error("text contains a tab or newline and cannot be written as TSV")]
    UnencodableCell,
    #[error("dev fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("corpus of {records} records is too small to split into non-empty train and dev parts")]
    TooSmall { records: usize },
    #[error("equalization total must be a positive multiple of {languages}, got {total}")]
    InvalidTotal { total: usize, languages: usize },
    #[error("corpus for {language} has {available} records, {required} needed (short by {})", required - available)]
    Shortfall {
        language: LanguageTag,
        available: usize,
        required: usize,
    },
    #[error("expected a monolingual corpus, found languages {0:?}")]
    NotMonolingual(Vec<LanguageTag>),
    #[error("language {0} appears in more than one corpus")]
    DuplicateLanguage(LanguageTag),
}

/// Two-letter lowercase language identifier such as `en` or `ru`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag([u8; 2]);

impl LanguageTag {
    pub const EN: LanguageTag = LanguageTag(*b"en");
    pub const RU: LanguageTag = LanguageTag(*b"ru");

    pub fn new(code: &str) -> Result<Self, CorpusError> {
        match code.as_bytes() {
            [a, b] if a.is_ascii_lowercase() && b.is_ascii_lowercase() => Ok(Self([*a, *b])),
            _ => Err(CorpusError::InvalidLanguage(code.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        // Both bytes are ASCII lowercase letters.
        std::str::from_utf8(&self.0).expect("ascii tag")
    }
}

impl FromStr for LanguageTag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<LanguageTag> for String {
    fn from(tag: LanguageTag) -> Self {
        tag.as_str().to_string()
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(CorpusError::InvalidSplit(other.to_string())),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One toxic sentence with its polite paraphrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetoxPair {
    toxic: String,
    references: Vec<String>,
    language: LanguageTag,
}

impl DetoxPair {
    /// Builds a pair. The toxic text and every reference must contain
    /// something other than whitespace.
    pub fn new(
        toxic: impl Into<String>,
        references: Vec<String>,
        language: LanguageTag,
    ) -> Result<Self, CorpusError> {
        let toxic = toxic.into();
        if toxic.trim().is_empty() {
            return Err(CorpusError::EmptyToxic);
        }
        if references.is_empty() || references.iter().any(|r| r.trim().is_empty()) {
            return Err(CorpusError::EmptyReference);
        }
        Ok(Self {
            toxic,
            references,
            language,
        })
    }

    pub fn toxic(&self) -> &str {
        &self.toxic
    }

    pub fn references(&self) -> &[String] {
        &self.references
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }
}

/// A single-target training example produced by [`flatten_references`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatPair {
    pub toxic: String,
    pub reference: String,
    pub language: LanguageTag,
}

/// An immutable list of detox pairs belonging to one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<DetoxPair>,
    split: Split,
    language_counts: BTreeMap<LanguageTag, usize>,
}

impl Corpus {
    pub fn new(records: Vec<DetoxPair>, split: Split) -> Self {
        let mut language_counts = BTreeMap::new();
        for record in &records {
            *language_counts.entry(record.language).or_insert(0) += 1;
        }
        Self {
            records,
            split,
            language_counts,
        }
    }

    pub fn records(&self) -> &[DetoxPair] {
        &self.records
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn language_counts(&self) -> &BTreeMap<LanguageTag, usize> {
        &self.language_counts
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Toxic sides of every record, in order.
    pub fn toxic_texts(&self) -> Vec<String> {
        self.records.iter().map(|r| r.toxic.clone()).collect()
    }

    /// The single language of a monolingual corpus.
    pub fn language(&self) -> Result<LanguageTag, CorpusError> {
        let mut langs = self.language_counts.keys().copied();
        match (langs.next(), langs.next()) {
            (Some(lang), None) => Ok(lang),
            _ => Err(CorpusError::NotMonolingual(
                self.language_counts.keys().copied().collect(),
            )),
        }
    }

    /// Serializes the corpus back into the TSV layout it was loaded from.
    pub fn to_tsv(&self) -> Result<String, CorpusError> {
        let mut out = String::new();
        for record in &self.records {
            let cells = std::iter::once(&record.toxic).chain(record.references.iter());
            for (i, cell) in cells.enumerate() {
                if cell.contains(['\t', '\n', '\r']) {
                    return Err(CorpusError::UnencodableCell);
                }
                if i > 0 {
                    out.push('\t');
                }
                out.push_str(cell);
            }
            out.push('\n');
        }
        Ok(out)
    }

    fn subset(&self, indices: &[usize], split: Split) -> Corpus {
        Corpus::new(
            indices.iter().map(|&i| self.records[i].clone()).collect(),
            split,
        )
    }
}

/// Parses TSV text into a corpus. `origin` only labels errors.
pub fn parse_parallel_tsv(
    content: &str,
    origin: &Path,
    language: LanguageTag,
    split: Split,
) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let row = i + 1;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() < 2 {
            return Err(CorpusError::MissingColumns {
                row,
                found: if line.trim().is_empty() { 0 } else { 1 },
            });
        }
        if let Some(column) = cells.iter().position(|c| c.trim().is_empty()) {
            return Err(CorpusError::EmptyCell {
                row,
                column: column + 1,
            });
        }
        let references = cells[1..].iter().map(|c| c.to_string()).collect();
        records.push(DetoxPair::new(cells[0], references, language)?);
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyFile {
            path: origin.to_path_buf(),
        });
    }
    Ok(Corpus::new(records, split))
}

/// Loads a parallel TSV file. Column 1 is the toxic text, columns 2.. are
/// references. Row order is preserved.
pub fn load_parallel_tsv(
    path: impl AsRef<Path>,
    language: LanguageTag,
    split: Split,
) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_parallel_tsv(&content, path, language, split)
}

/// Expands every (toxic, reference) combination into its own pair, in
/// record order and then reference order.
pub fn flatten_references(corpus: &Corpus) -> Vec<FlatPair> {
    corpus
        .records
        .iter()
        .flat_map(|record| {
            record.references.iter().map(|reference| FlatPair {
                toxic: record.toxic.clone(),
                reference: reference.clone(),
                language: record.language,
            })
        })
        .collect()
}

/// Number of dev records `split_train_dev` takes from a corpus of `len`.
pub fn dev_size(len: usize, dev_fraction: f64) -> usize {
    ((dev_fraction * len as f64).round() as usize).max(1)
}

/// Randomly partitions a corpus into train and dev parts. Within each part
/// records keep their original order.
pub fn split_train_dev(
    corpus: &Corpus,
    dev_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus), CorpusError> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(dev_fraction));
    }
    let n = corpus.len();
    let dev_count = dev_size(n, dev_fraction);
    if n < 2 || dev_count >= n {
        return Err(CorpusError::TooSmall { records: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_dev = vec![false; n];
    for i in index::sample(&mut rng, n, dev_count) {
        in_dev[i] = true;
    }
    let (dev, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_dev[i]);
    Ok((
        corpus.subset(&train, Split::Train),
        corpus.subset(&dev, Split::Dev),
    ))
}

/// Draws `total / corpora.len()` records from each monolingual corpus
/// without replacement and shuffles the union. The result takes the split
/// label of the first corpus.
pub fn equalize_languages(
    corpora: &[&Corpus],
    total: usize,
    seed: u64,
) -> Result<Corpus, CorpusError> {
    let languages = corpora.len();
    if languages == 0 || total == 0 || !total.is_multiple_of(languages) {
        return Err(CorpusError::InvalidTotal { total, languages });
    }
    let per_language = total / languages;
    let mut seen = Vec::with_capacity(languages);
    for corpus in corpora {
        let language = corpus.language()?;
        if seen.contains(&language) {
            return Err(CorpusError::DuplicateLanguage(language));
        }
        if corpus.len() < per_language {
            return Err(CorpusError::Shortfall {
                language,
                available: corpus.len(),
                required: per_language,
            });
        }
        seen.push(language);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut merged = Vec::with_capacity(total);
    for corpus in corpora {
        let picked = index::sample(&mut rng, corpus.len(), per_language);
        merged.extend(picked.into_iter().map(|i| corpus.records[i].clone()));
    }
    merged.shuffle(&mut rng);
    Ok(Corpus::new(merged, corpora[0].split))
}

/// Samples `total / 2` records from each of two corpora in different
/// languages and merges them in a seeded random order.
pub fn equalize_bilingual(
    corpus_a: &Corpus,
    corpus_b: &Corpus,
    total: usize,
    seed: u64,
) -> Result<Corpus, CorpusError> {
    equalize_languages(&[corpus_a, corpus_b], total, seed)
}
