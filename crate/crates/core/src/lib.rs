//! Multilingual text detoxification: corpora, toxic lexicons, the Delete and
//! CondBERT baselines, seq2seq and back-translation experiment runners, the
//! STA/SIM/FL/J metrics and a reporting harness.
//!
//! Every model-dependent piece sits behind a trait so the whole pipeline
//! runs offline against deterministic reference backends.

pub mod backend;
pub mod backtranslation;
pub mod baselines;
pub mod corpus;
pub mod harness;
pub mod lexicon;
pub mod metrics;
pub mod seq2seq;

pub use backend::{BackendError, Detoxifier};
pub use corpus::{Corpus, DetoxPair, LanguageTag, Split};
pub use lexicon::ToxicLexicon;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/lexicon.md")]
    mod lexicon {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/backtranslation.md")]
    mod backtranslation {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
}
