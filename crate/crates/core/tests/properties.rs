use std::collections::BTreeMap;

use proptest::prelude::*;

use mdetox::baselines::{condbert_detox, delete_detox, CondBertConfig, LexiconToxicity, ScriptedMaskedLM};
use mdetox::corpus::{dev_size, flatten_references, split_train_dev, Corpus, DetoxPair, LanguageTag, Split};
use mdetox::harness::{copy_rate, render_report, EvaluationReport, ReportFormat, ReportRow, RowMetrics};
use mdetox::lexicon::{match_spans, tokenize, ToxicLexicon};
use mdetox::metrics::{aggregate, compute_joint, fl_relative_corruption, SentenceScores};

fn lexicon() -> ToxicLexicon {
    ToxicLexicon::new(LanguageTag::EN, ["sh*t", "f*ck", "stupid", "wtf"]).unwrap()
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => "[a-z]{1,7}",
        1 => Just("sh*t".to_string()),
        1 => Just("Fuck".to_string()),
        1 => Just("STUPID!".to_string()),
        1 => Just("(wtf)".to_string()),
        1 => "[A-Z][a-z]{0,5}[.,!?]{0,3}",
    ]
}

fn sentence() -> impl Strategy<Value = String> {
    (prop::collection::vec(word(), 0..12), prop::collection::vec(" |  |\t", 12)).prop_map(|(words, gaps)| {
        let mut s = String::new();
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                s.push_str(&gaps[i]);
            }
            s.push_str(w);
        }
        s
    })
}

fn corpus_of(refs: &[usize]) -> Corpus {
    Corpus::new(
        refs.iter()
            .enumerate()
            .map(|(i, &k)| {
                DetoxPair::new(format!("toxic {i}"), (0..k).map(|j| format!("polite {i}.{j}")).collect(), LanguageTag::EN)
                    .unwrap()
            })
            .collect(),
        Split::Train,
    )
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

proptest! {
    #[test]
    fn flattening_preserves_reference_count(refs in prop::collection::vec(1usize..5, 1..30)) {
        let corpus = corpus_of(&refs);
        prop_assert_eq!(flatten_references(&corpus).len(), refs.iter().sum::<usize>());
    }

    #[test]
    fn split_partitions_in_order(n in 2usize..200, frac in 0.01..0.4f64, seed: u64) {
        let corpus = corpus_of(&vec![1; n]);
        let (train, dev) = split_train_dev(&corpus, frac, seed).unwrap();
        prop_assert_eq!(dev.len(), dev_size(n, frac));
        prop_assert_eq!(train.len() + dev.len(), n);
        let index = |t: &str| t.trim_start_matches("toxic ").parse::<usize>().unwrap();
        for part in [&train, &dev] {
            let ids: Vec<usize> = part.records().iter().map(|r| index(r.toxic())).collect();
            prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn tokens_cover_their_byte_ranges(text in sentence()) {
        for t in tokenize(&text) {
            prop_assert_eq!(&text[t.start..t.end], t.surface());
            prop_assert!(!t.surface().contains(char::is_whitespace));
        }
        let rebuilt: Vec<String> = tokenize(&text).iter().map(|t| t.surface()).collect();
        prop_assert_eq!(rebuilt.join(" "), text.split_whitespace().collect::<Vec<_>>().join(" "));
    }

    #[test]
    fn delete_is_idempotent_and_clean(text in sentence()) {
        let lex = lexicon();
        let once = delete_detox(&text, &lex);
        prop_assert!(match_spans(&once.output, &lex).is_empty());
        prop_assert_eq!(&delete_detox(&once.output, &lex).output, &once.output);
        prop_assert_eq!(once.modified, !match_spans(&text, &lex).is_empty());
    }

    #[test]
    fn delete_keeps_a_subsequence(text in sentence()) {
        let out = delete_detox(&text, &lexicon()).output;
        let mut source = text.split_whitespace();
        for kept in out.split_whitespace() {
            prop_assert!(source.any(|w| w == kept));
        }
    }

    #[test]
    fn condbert_without_candidates_is_delete(text in sentence()) {
        let lex = lexicon();
        let silent = ScriptedMaskedLM::new();
        let r = condbert_detox(&text, &lex, &silent, &LexiconToxicity(lex.clone()), &CondBertConfig::default()).unwrap();
        prop_assert_eq!(&r.output, &delete_detox(&text, &lex).output);
        prop_assert_eq!(r.fallback_deletions, r.spans_handled);
    }

    #[test]
    fn joint_is_bounded_by_every_column(triples in prop::collection::vec((unit(), unit(), unit()), 1..60)) {
        let scores: Vec<SentenceScores> = triples.iter().map(|&(a, b, c)| SentenceScores::new(a, b, c)).collect();
        let agg = aggregate(&scores).unwrap();
        prop_assert!((0.0..=1.0).contains(&agg.joint));
        prop_assert!(agg.joint <= agg.sta.min(agg.sim).min(agg.fl) + 1e-12);
        prop_assert_eq!(compute_joint(&scores).unwrap(), agg.joint);
    }

    #[test]
    fn out_of_range_components_are_clamped(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
        let s = SentenceScores::new(a, b, c);
        for v in [s.sta, s.sim, s.fl, s.joint] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn relative_corruption_is_monotone(src in unit(), gen in unit(), worse in 0.0..0.5f64) {
        let base = fl_relative_corruption(src, gen);
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(fl_relative_corruption(src, (gen + worse).min(1.0)) <= base);
    }

    #[test]
    fn self_copy_is_full(xs in prop::collection::vec(sentence(), 1..20)) {
        let r = copy_rate(&xs, &xs, 0.95).unwrap();
        prop_assert_eq!((r.exact_rate, r.near_rate), (1.0, 1.0));
    }

    #[test]
    fn copy_rate_ignores_joint_permutation(
        pairs in prop::collection::vec((sentence(), sentence()), 1..20),
        seed: u64,
        near in unit(),
    ) {
        let (xs, ys): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let px: Vec<String> = order.iter().map(|&i| xs[i].clone()).collect();
        let py: Vec<String> = order.iter().map(|&i| ys[i].clone()).collect();
        let a = copy_rate(&xs, &ys, near).unwrap();
        let b = copy_rate(&px, &py, near).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.near_rate >= a.exact_rate);
    }

    #[test]
    fn json_roundtrip_renders_identical_tsv(values in prop::collection::vec(prop::array::uniform6(unit()), 1..8)) {
        let rows: Vec<ReportRow> = values
            .iter()
            .enumerate()
            .map(|(i, v)| ReportRow {
                system_id: format!("sys{i}"),
                language: if i % 2 == 0 { LanguageTag::EN } else { LanguageTag::RU },
                n: 10,
                metrics: Some(RowMetrics { sta: v[0], sim: v[1], fl: v[2], joint: v[3], copy_rate: v[4], near_copy_rate: v[5] }),
                failure: None,
            })
            .collect();
        let report = EvaluationReport::new(rows, BTreeMap::new()).unwrap();
        let back = EvaluationReport::from_json(&render_report(&report, ReportFormat::Json)).unwrap();
        prop_assert_eq!(render_report(&back, ReportFormat::Tsv), render_report(&report, ReportFormat::Tsv));
        prop_assert_eq!(render_report(&back, ReportFormat::Markdown), render_report(&report, ReportFormat::Markdown));
    }
}
