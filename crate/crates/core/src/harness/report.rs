//! Comparison tables in TSV, JSON and markdown.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LanguageTag;
use crate::metrics::{FlMode, StaMode, SuiteDescriptor};

use super::evaluate::{ReportRow, RowMetrics};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("a report needs at least one row")]
    Empty,
    #[error("system {system_id} appears twice for {language}")]
    DuplicateRow { system_id: String, language: LanguageTag },
    #[error("row {system_id}/{language} has {column} = {value}, outside [0, 1]")]
    OutOfRange {
        system_id: String,
        language: LanguageTag,
        column: &'static str,
        value: f64,
    },
    #[error("row {system_id}/{language} has neither metrics nor a failure reason")]
    Hollow { system_id: String, language: LanguageTag },
    #[error("scorer suite for {0} differs between rows")]
    ConflictingSuites(LanguageTag),
    #[error("unknown report format {0:?}, expected tsv, json or markdown")]
    UnknownFormat(String),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(Self::Tsv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// A score column that takes part in best-value highlighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Sta,
    Sim,
    Fl,
    Joint,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::Sta, Column::Sim, Column::Fl, Column::Joint];

    fn of(self, m: &RowMetrics) -> f64 {
        match self {
            Column::Sta => m.sta,
            Column::Sim => m.sim,
            Column::Fl => m.fl,
            Column::Joint => m.joint,
        }
    }
}

/// Value as displayed: three decimals.
pub fn display3(x: f64) -> String {
    format!("{x:.3}")
}

fn rounded(x: f64) -> f64 {
    display3(x).parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    rows: Vec<ReportRow>,
    suites: BTreeMap<LanguageTag, SuiteDescriptor>,
    generated_unix: u64,
    tool_version: String,
}

impl EvaluationReport {
    /// Validates `rows` and groups them by language. Languages keep the order
    /// in which they first appear; rows keep their order within a language.
    pub fn new(rows: Vec<ReportRow>, suites: BTreeMap<LanguageTag, SuiteDescriptor>) -> Result<Self, ReportError> {
        Self::assemble(rows, suites, super::now_unix(), super::TOOL_VERSION.to_string())
    }

    fn assemble(
        rows: Vec<ReportRow>,
        suites: BTreeMap<LanguageTag, SuiteDescriptor>,
        generated_unix: u64,
        tool_version: String,
    ) -> Result<Self, ReportError> {
        if rows.is_empty() {
            return Err(ReportError::Empty);
        }
        let mut seen = BTreeSet::new();
        for row in &rows {
            if !seen.insert((row.system_id.clone(), row.language)) {
                return Err(ReportError::DuplicateRow {
                    system_id: row.system_id.clone(),
                    language: row.language,
                });
            }
            match &row.metrics {
                Some(m) => {
                    let named = [
                        ("STA", m.sta),
                        ("SIM", m.sim),
                        ("FL", m.fl),
                        ("J", m.joint),
                        ("copy_rate", m.copy_rate),
                        ("near_copy_rate", m.near_copy_rate),
                    ];
                    for (column, value) in named {
                        if !(0.0..=1.0).contains(&value) {
                            return Err(ReportError::OutOfRange {
                                system_id: row.system_id.clone(),
                                language: row.language,
                                column,
                                value,
                            });
                        }
                    }
                }
                None if row.failure.is_none() => {
                    return Err(ReportError::Hollow {
                        system_id: row.system_id.clone(),
                        language: row.language,
                    })
                }
                None => {}
            }
        }
        let mut order: Vec<LanguageTag> = Vec::new();
        for row in &rows {
            if !order.contains(&row.language) {
                order.push(row.language);
            }
        }
        let mut grouped = Vec::with_capacity(rows.len());
        for lang in &order {
            grouped.extend(rows.iter().filter(|r| r.language == *lang).cloned());
        }
        Ok(Self {
            rows: grouped,
            suites,
            generated_unix,
            tool_version,
        })
    }

    /// Merges per-row suite descriptors, rejecting conflicting ones.
    pub fn from_rows_with_suites(
        entries: impl IntoIterator<Item = (ReportRow, Option<SuiteDescriptor>)>,
    ) -> Result<Self, ReportError> {
        let mut rows = Vec::new();
        let mut suites: BTreeMap<LanguageTag, SuiteDescriptor> = BTreeMap::new();
        for (row, suite) in entries {
            if let Some(suite) = suite {
                match suites.get(&suite.language) {
                    Some(existing) if *existing != suite => {
                        return Err(ReportError::ConflictingSuites(suite.language))
                    }
                    Some(_) => {}
                    None => {
                        suites.insert(suite.language, suite);
                    }
                }
            }
            rows.push(row);
        }
        Self::new(rows, suites)
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn suites(&self) -> &BTreeMap<LanguageTag, SuiteDescriptor> {
        &self.suites
    }

    pub fn generated_unix(&self) -> u64 {
        self.generated_unix
    }

    pub fn tool_version(&self) -> &str {
        &self.tool_version
    }

    pub fn languages(&self) -> Vec<LanguageTag> {
        let mut out = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.language) {
                out.push(row.language);
            }
        }
        out
    }

    pub fn rows_for(&self, language: LanguageTag) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.language == language)
    }

    /// Best displayed value of `column` among scored rows of `language`.
    pub fn best(&self, language: LanguageTag, column: Column) -> Option<f64> {
        self.rows_for(language)
            .filter_map(|r| r.metrics.as_ref())
            .map(|m| rounded(column.of(m)))
            .fold(None, |best, v| Some(best.map_or(v, |b: f64| b.max(v))))
    }

    /// Whether `row` holds the best displayed value of `column`. Ties count
    /// for every tied row.
    pub fn is_best(&self, row: &ReportRow, column: Column) -> bool {
        match (&row.metrics, self.best(row.language, column)) {
            (Some(m), Some(best)) => rounded(column.of(m)) == best,
            _ => false,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(content: &str) -> Result<Self, ReportError> {
        let raw: Self = serde_json::from_str(content).map_err(|e| ReportError::Malformed(e.to_string()))?;
        Self::assemble(raw.rows, raw.suites, raw.generated_unix, raw.tool_version)
    }
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Tsv => render_tsv(report),
        ReportFormat::Json => report.to_json(),
        ReportFormat::Markdown => render_markdown(report),
    }
}

const TSV_HEADER: &str = "language\tsystem\tSTA\tSIM\tFL\tJ\tcopy_rate\tnear_copy_rate\tn\tstatus";

fn tsv_cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn render_tsv(report: &EvaluationReport) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for row in report.rows() {
        let (values, status) = match &row.metrics {
            Some(m) => (
                [m.sta, m.sim, m.fl, m.joint, m.copy_rate, m.near_copy_rate].map(display3),
                "ok".to_string(),
            ),
            None => (
                std::array::from_fn(|_| "FAILED".to_string()),
                format!("failed: {}", tsv_cell(row.failure.as_deref().unwrap_or(""))),
            ),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            row.language,
            tsv_cell(&row.system_id),
            values.join("\t"),
            row.n,
            status
        );
    }
    out
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|").replace(['\n', '\r'], " ")
}

fn sta_note(suite: &SuiteDescriptor) -> String {
    match suite.profile().sta {
        StaMode::Thresholded { threshold } => {
            format!("STA is the share of outputs whose toxicity is at most {threshold}")
        }
        StaMode::Complement => "STA is the mean of 1 − toxicity".to_string(),
    }
}

fn fl_note(suite: &SuiteDescriptor) -> String {
    match suite.profile().fl {
        FlMode::Acceptability { threshold } => {
            format!("FL is the share of outputs judged acceptable with probability at least {threshold}")
        }
        FlMode::RelativeCorruption => {
            "FL penalises only corruption the output adds over its source".to_string()
        }
    }
}

fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = String::from("# Evaluation report\n");
    let mut failures = Vec::new();
    for lang in report.languages() {
        let _ = write!(
            out,
            "\n## {lang}\n\n| System | STA | SIM | FL | J | Copy | Near copy | n |\n|---|---:|---:|---:|---:|---:|---:|---:|\n"
        );
        for row in report.rows_for(lang) {
            let system = md_cell(&row.system_id);
            match &row.metrics {
                Some(m) => {
                    let scored: Vec<String> = Column::ALL
                        .iter()
                        .map(|&c| {
                            let v = display3(c.of(m));
                            if report.is_best(row, c) {
                                format!("**{v}**")
                            } else {
                                v
                            }
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        "| {system} | {} | {} | {} | {} |",
                        scored.join(" | "),
                        display3(m.copy_rate),
                        display3(m.near_copy_rate),
                        row.n
                    );
                }
                None => {
                    let _ = writeln!(out, "| {system} | FAILED | FAILED | FAILED | FAILED | FAILED | FAILED | {} |", row.n);
                    failures.push(format!(
                        "{system} ({lang}): {}",
                        md_cell(row.failure.as_deref().unwrap_or("unknown failure"))
                    ));
                }
            }
        }
        if let Some(suite) = report.suites().get(&lang) {
            let _ = write!(
                out,
                "\nScored with toxicity `{}`, similarity `{}`, fluency `{}`. {}. {}.\n",
                md_cell(&suite.toxicity_model),
                md_cell(&suite.similarity_model),
                md_cell(&suite.fluency_model),
                sta_note(suite),
                fl_note(suite)
            );
        }
    }
    out.push_str("\n## Notes\n\n");
    out.push_str("- Bold marks the best value per language and column after rounding; tied rows are all bold.\n");
    out.push_str("- J is the mean over sentences of STA·SIM·FL. It is not the product of the STA, SIM and FL columns.\n");
    out.push_str("- Copy and near copy are the shares of outputs identical or nearly identical to their inputs.\n");
    for f in failures {
        let _ = writeln!(out, "- FAILED {f}");
    }
    out
}
