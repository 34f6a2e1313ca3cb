//! How often a system hands back its input.
//!
//! A model that fails to transfer style tends to reproduce its input
//! verbatim or nearly so. Two rates capture that: the exact rate compares
//! sentences after lowercasing and collapsing whitespace, the near rate
//! accepts any pair whose character-level similarity
//! `1 − levenshtein / max_len` reaches the threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NEAR_COPY_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum CopyRateError {
    #[error("{inputs} inputs but {outputs} outputs")]
    LengthMismatch { inputs: usize, outputs: usize },
    #[error("copy rate of an empty run is undefined")]
    Empty,
    #[error("near-copy threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopyRate {
    pub exact_rate: f64,
    pub near_rate: f64,
    pub n: usize,
}

/// Lowercases and collapses whitespace runs.
pub fn normalize_for_copy(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// `1 − levenshtein(a, b) / max(len a, len b)` over chars; 1 for two empty
/// strings.
pub fn char_similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / max_len as f64
}

pub fn copy_rate(inputs: &[String], outputs: &[String], near_threshold: f64) -> Result<CopyRate, CopyRateError> {
    if inputs.len() != outputs.len() {
        return Err(CopyRateError::LengthMismatch {
            inputs: inputs.len(),
            outputs: outputs.len(),
        });
    }
    if inputs.is_empty() {
        return Err(CopyRateError::Empty);
    }
    if !(0.0..=1.0).contains(&near_threshold) {
        return Err(CopyRateError::InvalidThreshold(near_threshold));
    }
    let mut exact = 0usize;
    let mut near = 0usize;
    for (input, output) in inputs.iter().zip(outputs) {
        let (a, b) = (normalize_for_copy(input), normalize_for_copy(output));
        if a == b {
            exact += 1;
            near += 1;
        } else if char_similarity(&a, &b) >= near_threshold {
            near += 1;
        }
    }
    let n = inputs.len();
    Ok(CopyRate {
        exact_rate: exact as f64 / n as f64,
        near_rate: near as f64 / n as f64,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identity_is_full_copy() {
        let xs = strings(&["a b", "Привет, мир"]);
        let r = copy_rate(&xs, &xs, NEAR_COPY_THRESHOLD).unwrap();
        assert_eq!((r.exact_rate, r.near_rate), (1.0, 1.0));
    }

    #[test]
    fn case_and_spacing_do_not_count_as_edits() {
        let r = copy_rate(&strings(&["Hello  World"]), &strings(&[" hello world "]), 0.95).unwrap();
        assert_eq!(r.exact_rate, 1.0);
    }

    #[test]
    fn heavy_rewrites_are_not_copies() {
        // 20-char inputs with 2 substitutions each: similarity 0.9 < 0.95.
        let inputs = strings(&["abcdefghijklmnopqrst", "the cat sat on a mat"]);
        let outputs = strings(&["xycdefghijklmnopqrst", "the bat sat on a hat"]);
        assert_eq!(char_similarity(&inputs[0], &outputs[0]), 0.9);
        let r = copy_rate(&inputs, &outputs, 0.95).unwrap();
        assert_eq!((r.exact_rate, r.near_rate), (0.0, 0.0));
    }

    #[test]
    fn near_copies_count_only_for_near_rate() {
        // One substitution in 20 chars: similarity exactly 0.95.
        let r = copy_rate(&strings(&["abcdefghijklmnopqrst"]), &strings(&["abcdefghijklmnopqrsx"]), 0.95).unwrap();
        assert_eq!((r.exact_rate, r.near_rate), (0.0, 1.0));
    }

    #[test]
    fn one_of_four_identical() {
        let inputs = strings(&["same", "alpha", "beta", "gamma"]);
        let outputs = strings(&["same", "zzzzz", "qqqq", "wwwww"]);
        let r = copy_rate(&inputs, &outputs, 0.95).unwrap();
        assert_eq!((r.exact_rate, r.near_rate), (0.25, 0.25));
    }

    #[test]
    fn errors() {
        assert_eq!(
            copy_rate(&strings(&["a"]), &[], 0.95),
            Err(CopyRateError::LengthMismatch { inputs: 1, outputs: 0 })
        );
        assert_eq!(copy_rate(&[], &[], 0.95), Err(CopyRateError::Empty));
        assert!(copy_rate(&strings(&["a"]), &strings(&["a"]), 1.5).is_err());
    }
}
