//! System runs: aligned input/output sentence lists plus provenance.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LanguageTag;

use super::io::{read_text, write_atomic};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("system id must not be empty")]
    EmptySystemId,
    #[error("{inputs} inputs but {outputs} outputs")]
    Misaligned { inputs: usize, outputs: usize },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Where a run came from. Everything except the timestamps is a function of
/// the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub system_id: String,
    /// delete, condbert, seq2seq or backtranslate.
    pub method: String,
    pub backend_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunManifest {
    pub fn new(system_id: impl Into<String>, method: impl Into<String>, backend_id: impl Into<String>) -> Self {
        let now = super::now_unix();
        Self {
            system_id: system_id.into(),
            method: method.into(),
            backend_id: backend_id.into(),
            seed: None,
            setup: None,
            config: None,
            details: BTreeMap::new(),
            tool_version: super::TOOL_VERSION.to_string(),
            started_unix: now,
            finished_unix: now,
        }
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Self {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn finish(mut self) -> Self {
        self.finished_unix = super::now_unix();
        self
    }
}

/// One system's outputs on one language's test sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRun {
    system_id: String,
    language: LanguageTag,
    inputs: Vec<String>,
    outputs: Vec<String>,
    manifest: RunManifest,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunLine {
    index: usize,
    language: LanguageTag,
    input: String,
    output: String,
}

impl SystemRun {
    pub fn new(
        system_id: impl Into<String>,
        language: LanguageTag,
        inputs: Vec<String>,
        outputs: Vec<String>,
        manifest: RunManifest,
    ) -> Result<Self, RunError> {
        let system_id = system_id.into();
        if system_id.trim().is_empty() {
            return Err(RunError::EmptySystemId);
        }
        if inputs.len() != outputs.len() {
            return Err(RunError::Misaligned {
                inputs: inputs.len(),
                outputs: outputs.len(),
            });
        }
        Ok(Self {
            system_id,
            language,
            inputs,
            outputs,
            manifest,
        })
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// One `{index, language, input, output}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (index, (input, output)) in self.inputs.iter().zip(&self.outputs).enumerate() {
            let line = RunLine {
                index,
                language: self.language,
                input: input.clone(),
                output: output.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("run line serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses run JSONL. Indices must count up from 0 and every line must
    /// carry the same language.
    pub fn from_jsonl(content: &str, manifest: RunManifest) -> Result<Self, RunError> {
        let mut language = None;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (i, raw) in content.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| RunError::Parse { line: i + 1, message };
            let line: RunLine = serde_json::from_str(raw).map_err(|e| parse_err(e.to_string()))?;
            if line.index != inputs.len() {
                return Err(parse_err(format!("expected index {}, found {}", inputs.len(), line.index)));
            }
            match language {
                None => language = Some(line.language),
                Some(l) if l != line.language => {
                    return Err(parse_err(format!("language {} differs from {l}", line.language)))
                }
                _ => {}
            }
            inputs.push(line.input);
            outputs.push(line.output);
        }
        let language = language.ok_or(RunError::Parse {
            line: 0,
            message: "run file has no sentences".into(),
        })?;
        let system_id = manifest.system_id.clone();
        Self::new(system_id, language, inputs, outputs, manifest)
    }

    /// Writes `<path>` (JSONL) and `<path>.manifest.json`, each atomically.
    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let io_err = |p: &Path, e: std::io::Error| RunError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        write_atomic(path, self.to_jsonl().as_bytes()).map_err(|e| io_err(path, e))?;
        let manifest_path = manifest_path(path);
        let manifest = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&manifest_path, manifest.as_bytes()).map_err(|e| io_err(&manifest_path, e))
    }

    /// Reads a run file. The sibling manifest is used when present;
    /// otherwise the system id falls back to `fallback_id` or the file stem.
    pub fn read(path: &Path, fallback_id: Option<&str>) -> Result<Self, RunError> {
        let io_err = |e: std::io::Error| RunError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let content = read_text(path).map_err(io_err)?;
        let manifest_path = manifest_path(path);
        let mut manifest = if manifest_path.exists() {
            let text = read_text(&manifest_path).map_err(io_err)?;
            serde_json::from_str(&text).map_err(|e| RunError::Parse {
                line: 0,
                message: format!("{}: {e}", manifest_path.display()),
            })?
        } else {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            RunManifest::new(stem, "unknown", "unknown")
        };
        if let Some(id) = fallback_id {
            manifest.system_id = id.to_string();
        }
        Self::from_jsonl(&content, manifest)
    }
}

/// `run.jsonl` → `run.jsonl.manifest.json`.
pub fn manifest_path(run_path: &Path) -> std::path::PathBuf {
    let mut name = run_path.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}
