use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LanguageTag;
use crate::metrics::{aggregate, score_sentence, MetricProfile, ScorerError, ScorerSuite, SentenceScores, SuiteDescriptor};

use super::copy_rate::{copy_rate, CopyRateError};
use super::run::SystemRun;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("run {0} has no sentences")]
    EmptyRun(String),
    #[error("run is {run} but the scorer suite is for {suite}")]
    LanguageMismatch { run: LanguageTag, suite: LanguageTag },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    CopyRate(#[from] CopyRateError),
}

/// Aggregate scores of one system on one language.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub sta: f64,
    pub sim: f64,
    pub fl: f64,
    pub joint: f64,
    pub copy_rate: f64,
    pub near_copy_rate: f64,
}

/// One line of a report: either metrics or the reason scoring failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system_id: String,
    pub language: LanguageTag,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RowMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ReportRow {
    pub fn failed(system_id: impl Into<String>, language: LanguageTag, n: usize, reason: impl Into<String>) -> Self {
        Self {
            system_id: system_id.into(),
            language,
            n,
            metrics: None,
            failure: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedRun {
    pub row: ReportRow,
    pub scores: Vec<SentenceScores>,
    pub suite: SuiteDescriptor,
}

/// Scores every sentence of `run` under `profile` and aggregates the
/// results into a report row.
pub fn evaluate_run(
    run: &SystemRun,
    suite: &dyn ScorerSuite,
    profile: &MetricProfile,
    near_threshold: f64,
) -> Result<EvaluatedRun, EvaluationError> {
    if run.is_empty() {
        return Err(EvaluationError::EmptyRun(run.system_id().to_string()));
    }
    if suite.language() != run.language() {
        return Err(EvaluationError::LanguageMismatch {
            run: run.language(),
            suite: suite.language(),
        });
    }
    let scores = run
        .inputs()
        .iter()
        .zip(run.outputs())
        .map(|(source, output)| score_sentence(source, output, suite, profile))
        .collect::<Result<Vec<_>, _>>()?;
    let agg = aggregate(&scores)?;
    let copies = copy_rate(run.inputs(), run.outputs(), near_threshold)?;
    let row = ReportRow {
        system_id: run.system_id().to_string(),
        language: run.language(),
        n: run.len(),
        metrics: Some(RowMetrics {
            sta: agg.sta,
            sim: agg.sim,
            fl: agg.fl,
            joint: agg.joint,
            copy_rate: copies.exact_rate,
            near_copy_rate: copies.near_rate,
        }),
        failure: None,
    };
    Ok(EvaluatedRun {
        row,
        scores,
        suite: SuiteDescriptor::new(suite, profile),
    })
}

/// Like [`evaluate_run`] but turns a failure into a failed row.
pub fn evaluate_or_mark_failed(
    run: &SystemRun,
    suite: &dyn ScorerSuite,
    profile: &MetricProfile,
    near_threshold: f64,
) -> ReportRow {
    evaluate_run(run, suite, profile, near_threshold)
        .map(|e| e.row)
        .unwrap_or_else(|e| ReportRow::failed(run.system_id(), run.language(), run.len(), e.to_string()))
}
