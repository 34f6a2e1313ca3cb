//! Sentence-level style transfer scores and the joint metric.
//!
//! Every sentence gets three scores in `[0, 1]`:
//!
//! * **STA**: how non-toxic the output is,
//! * **SIM**: how much of the source meaning it keeps,
//! * **FL**: how fluent it is,
//!
//! and the joint score `J` of a system is the mean over sentences of
//! `STA·SIM·FL`. The mean of products is generally *not* the product of the
//! column means, so `J` must be computed from per-sentence scores.
//!
//! English and Russian use different STA and FL definitions; see
//! [`MetricProfile`].

mod reference;

pub use reference::{reference_scorer_suite, ReferenceSuite};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LanguageTag;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer {scorer} failed: {message}")]
    Failed { scorer: String, message: String },
    #[error("cannot aggregate an empty score list")]
    Empty,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
}

impl ScorerError {
    pub fn failed(scorer: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Failed {
            scorer: scorer.into(),
            message: message.into(),
        }
    }
}

/// Clamps into `[0, 1]`; NaN maps to 0.
pub fn clamp01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// STA, SIM and FL of one sentence together with their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceScores {
    pub sta: f64,
    pub sim: f64,
    pub fl: f64,
    pub joint: f64,
}

impl SentenceScores {
    /// Clamps each component into `[0, 1]` and computes `joint`.
    pub fn new(sta: f64, sim: f64, fl: f64) -> Self {
        let (sta, sim, fl) = (clamp01(sta), clamp01(sim), clamp01(fl));
        Self {
            sta,
            sim,
            fl,
            joint: sta * sim * fl,
        }
    }
}

/// Names of the models behind a suite, recorded verbatim in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteModels {
    pub toxicity_model: String,
    pub similarity_model: String,
    pub fluency_model: String,
}

/// The external classifiers and embedders that realize STA, SIM and FL
/// for one language. Scores should be pure functions of their inputs.
pub trait ScorerSuite {
    fn language(&self) -> LanguageTag;

    fn models(&self) -> SuiteModels;

    /// Confidence in `[0, 1]` that `text` is toxic.
    fn toxicity(&self, text: &str) -> Result<f64, ScorerError>;

    /// Raw similarity of two sentences; may fall outside `[0, 1]`.
    fn similarity(&self, source: &str, generated: &str) -> Result<f64, ScorerError>;

    /// Confidence in `[0, 1]` that `text` is acceptable.
    fn fluency_acceptability(&self, text: &str) -> Result<f64, ScorerError>;

    /// Confidence in `[0, 1]` that `text` is a corrupted sentence.
    fn corruption(&self, text: &str) -> Result<f64, ScorerError>;

    /// Whether concurrent calls on one instance are safe.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

pub const STA_EN_THRESHOLD: f64 = 0.8;
pub const FL_EN_THRESHOLD: f64 = 0.5;

fn check_threshold(t: f64) -> Result<(), ScorerError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(ScorerError::InvalidThreshold(t))
    }
}

/// 0 if the toxicity confidence is strictly above `threshold`, else 1.
pub fn score_sta_english(generated: &str, suite: &dyn ScorerSuite, threshold: f64) -> Result<f64, ScorerError> {
    check_threshold(threshold)?;
    let toxicity = suite.toxicity(generated)?;
    Ok(if toxicity > threshold { 0.0 } else { 1.0 })
}

/// `1 − toxicity`, continuous.
pub fn score_sta_russian(generated: &str, suite: &dyn ScorerSuite) -> Result<f64, ScorerError> {
    Ok(1.0 - clamp01(suite.toxicity(generated)?))
}

pub fn score_sim(source: &str, generated: &str, suite: &dyn ScorerSuite) -> Result<f64, ScorerError> {
    Ok(clamp01(suite.similarity(source, generated)?))
}

/// 1 if the acceptability confidence reaches `threshold`, else 0.
pub fn score_fl_english(generated: &str, suite: &dyn ScorerSuite, threshold: f64) -> Result<f64, ScorerError> {
    check_threshold(threshold)?;
    Ok(if suite.fluency_acceptability(generated)? >= threshold {
        1.0
    } else {
        0.0
    })
}

/// Relative corruption penalty: `clamp(1 − max(0, c(gen) − c(src)))`.
/// Anything no more corrupted than its source scores 1.
pub fn fl_relative_corruption(corruption_source: f64, corruption_generated: f64) -> f64 {
    clamp01(1.0 - (corruption_generated - corruption_source).max(0.0))
}

pub fn score_fl_russian(source: &str, generated: &str, suite: &dyn ScorerSuite) -> Result<f64, ScorerError> {
    let src = suite.corruption(source)?;
    let gen = suite.corruption(generated)?;
    Ok(fl_relative_corruption(src, gen))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StaMode {
    /// Indicator of toxicity confidence not exceeding the threshold.
    Thresholded { threshold: f64 },
    /// `1 − toxicity`.
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlMode {
    /// Indicator of acceptability reaching the threshold.
    Acceptability { threshold: f64 },
    /// Penalty for being more corrupted than the source.
    RelativeCorruption,
}

/// Which STA and FL variants a language is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricProfile {
    pub sta: StaMode,
    pub fl: FlMode,
}

impl MetricProfile {
    pub fn english() -> Self {
        Self {
            sta: StaMode::Thresholded {
                threshold: STA_EN_THRESHOLD,
            },
            fl: FlMode::Acceptability {
                threshold: FL_EN_THRESHOLD,
            },
        }
    }

    pub fn russian() -> Self {
        Self {
            sta: StaMode::Complement,
            fl: FlMode::RelativeCorruption,
        }
    }

    /// Built-in profiles exist for `en` and `ru` only.
    pub fn for_language(language: LanguageTag) -> Option<Self> {
        match language {
            LanguageTag::EN => Some(Self::english()),
            LanguageTag::RU => Some(Self::russian()),
            _ => None,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        LanguageTag::new(name).ok().and_then(Self::for_language)
    }

    pub fn with_sta_threshold(mut self, threshold: f64) -> Self {
        if let StaMode::Thresholded { .. } = self.sta {
            self.sta = StaMode::Thresholded { threshold };
        }
        self
    }

    pub fn with_fl_threshold(mut self, threshold: f64) -> Self {
        if let FlMode::Acceptability { .. } = self.fl {
            self.fl = FlMode::Acceptability { threshold };
        }
        self
    }
}

/// Scores one (source, output) pair under `profile`.
pub fn score_sentence(
    source: &str,
    generated: &str,
    suite: &dyn ScorerSuite,
    profile: &MetricProfile,
) -> Result<SentenceScores, ScorerError> {
    let sta = match profile.sta {
        StaMode::Thresholded { threshold } => score_sta_english(generated, suite, threshold)?,
        StaMode::Complement => score_sta_russian(generated, suite)?,
    };
    let sim = score_sim(source, generated, suite)?;
    let fl = match profile.fl {
        FlMode::Acceptability { threshold } => score_fl_english(generated, suite, threshold)?,
        FlMode::RelativeCorruption => score_fl_russian(source, generated, suite)?,
    };
    Ok(SentenceScores::new(sta, sim, fl))
}

/// Mean over sentences of `STA·SIM·FL`.
pub fn compute_joint(scores: &[SentenceScores]) -> Result<f64, ScorerError> {
    if scores.is_empty() {
        return Err(ScorerError::Empty);
    }
    let total: f64 = scores.iter().map(|s| s.sta * s.sim * s.fl).sum();
    Ok(clamp01(total / scores.len() as f64))
}

/// Column means and `J` for a list of sentence scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sta: f64,
    pub sim: f64,
    pub fl: f64,
    pub joint: f64,
    pub n: usize,
}

/// Averages each column and computes `J` with [`compute_joint`]. `J` is not
/// `sta * sim * fl` of the result unless the scores are constant.
pub fn aggregate(scores: &[SentenceScores]) -> Result<Aggregate, ScorerError> {
    let joint = compute_joint(scores)?;
    let n = scores.len() as f64;
    let mean = |f: fn(&SentenceScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    Ok(Aggregate {
        sta: mean(|s| s.sta),
        sim: mean(|s| s.sim),
        fl: mean(|s| s.fl),
        joint,
        n: scores.len(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sta_toxicity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fl_acceptability: Option<f64>,
}

/// Provenance of the scores for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteDescriptor {
    pub language: LanguageTag,
    pub toxicity_model: String,
    pub similarity_model: String,
    pub fluency_model: String,
    pub thresholds: Thresholds,
}

impl SuiteDescriptor {
    pub fn new(suite: &dyn ScorerSuite, profile: &MetricProfile) -> Self {
        let models = suite.models();
        let sta_toxicity = match profile.sta {
            StaMode::Thresholded { threshold } => Some(threshold),
            StaMode::Complement => None,
        };
        let fl_acceptability = match profile.fl {
            FlMode::Acceptability { threshold } => Some(threshold),
            FlMode::RelativeCorruption => None,
        };
        Self {
            language: suite.language(),
            toxicity_model: models.toxicity_model,
            similarity_model: models.similarity_model,
            fluency_model: models.fluency_model,
            thresholds: Thresholds {
                sta_toxicity,
                fl_acceptability,
            },
        }
    }

    pub fn profile(&self) -> MetricProfile {
        MetricProfile {
            sta: match self.thresholds.sta_toxicity {
                Some(threshold) => StaMode::Thresholded { threshold },
                None => StaMode::Complement,
            },
            fl: match self.thresholds.fl_acceptability {
                Some(threshold) => FlMode::Acceptability { threshold },
                None => FlMode::RelativeCorruption,
            },
        }
    }
}

#[derive(Serialize)]
struct ScoreLine {
    index: usize,
    sta: f64,
    sim: f64,
    fl: f64,
    joint: f64,
}

/// One `{index, sta, sim, fl, joint}` object per line.
pub fn scores_to_jsonl(scores: &[SentenceScores]) -> String {
    let mut out = String::new();
    for (index, s) in scores.iter().enumerate() {
        let line = ScoreLine {
            index,
            sta: s.sta,
            sim: s.sim,
            fl: s.fl,
            joint: s.joint,
        };
        out.push_str(&serde_json::to_string(&line).expect("scores serialize"));
        out.push('\n');
    }
    out
}
