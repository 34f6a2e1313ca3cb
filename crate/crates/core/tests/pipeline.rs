use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use mdetox::backtranslation::{backtranslate_detox, BacktranslationConfig, StubTranslator};
use mdetox::baselines::{delete_detox, DeleteDetoxifier};
use mdetox::corpus::{load_parallel_tsv, Corpus, LanguageTag, Split};
use mdetox::harness::{evaluate_run, RunManifest, SystemRun};
use mdetox::lexicon::load_lexicon;
use mdetox::metrics::{reference_scorer_suite, scores_to_jsonl, MetricProfile, ScorerSuite};
use mdetox::seq2seq::{
    prepare_training_data, run_experiment, CopyBackend, ExperimentSetup, LanguageData, TrainingConfig,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn corpus(lang: LanguageTag, split: Split) -> Corpus {
    load_parallel_tsv(fixture(&format!("{lang}.tsv")), lang, split).unwrap()
}

fn mdetox(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mdetox")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cli_matches_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let run_path = dir.path().join("run.jsonl");
    let scores_path = dir.path().join("scores.jsonl");
    let rows_path = dir.path().join("rows.json");
    let lex_path = fixture("lexicon_en.txt");

    let out = mdetox(&[
        "detox", "--method", "delete", "--language", "en", "--lexicon", s(&lex_path),
        "--in", s(&fixture("en.tsv")), "--out", s(&run_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = mdetox(&[
        "evaluate", "--run", s(&run_path), "--lexicon", s(&lex_path), "--scores", s(&scores_path),
        "--out", s(&rows_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let lex = load_lexicon(&lex_path, LanguageTag::EN).unwrap();
    let inputs = corpus(LanguageTag::EN, Split::Test).toxic_texts();
    let outputs: Vec<String> = inputs.iter().map(|t| delete_detox(t, &lex).output).collect();
    let expected = SystemRun::new("delete", LanguageTag::EN, inputs, outputs, RunManifest::new("delete", "delete", "delete")).unwrap();

    let from_cli = SystemRun::read(&run_path, None).unwrap();
    assert_eq!(std::fs::read_to_string(&run_path).unwrap(), expected.to_jsonl());
    assert_eq!(from_cli.manifest().method, "delete");

    let evaluated = evaluate_run(&expected, &reference_scorer_suite(lex), &MetricProfile::english(), 0.95).unwrap();
    assert_eq!(std::fs::read_to_string(&scores_path).unwrap(), scores_to_jsonl(&evaluated.scores));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rows_path).unwrap()).unwrap();
    let cli_row: mdetox::harness::ReportRow = serde_json::from_value(rows[0]["row"].clone()).unwrap();
    assert_eq!(cli_row, evaluated.row);
    assert_eq!(cli_row.metrics.unwrap().sta, 1.0);
}

#[test]
fn copy_backend_sta_is_source_non_toxicity() {
    let lex = load_lexicon(fixture("lexicon_ru.txt"), LanguageTag::RU).unwrap();
    let test = corpus(LanguageTag::RU, Split::Test);
    let corpora = BTreeMap::from([(
        LanguageTag::RU,
        LanguageData {
            train: Some(corpus(LanguageTag::RU, Split::Train)),
            dev: None,
            test: Some(test.clone()),
        },
    )]);
    let runs = run_experiment(&ExperimentSetup::monolingual(LanguageTag::RU), &corpora, &CopyBackend, &TrainingConfig::mt5(3)).unwrap();
    let suite = reference_scorer_suite(lex);
    let evaluated = evaluate_run(&runs[&LanguageTag::RU], &suite, &MetricProfile::russian(), 0.95).unwrap();

    let non_toxicity: f64 = test
        .toxic_texts()
        .iter()
        .map(|t| 1.0 - suite.toxicity(t).unwrap())
        .sum::<f64>()
        / test.len() as f64;
    let m = evaluated.row.metrics.unwrap();
    assert!((m.sta - non_toxicity).abs() < 1e-12);
    assert_eq!(m.copy_rate, 1.0);
    assert!(m.sta < 1.0);
}

#[test]
fn multilingual_fixture_training_is_balanced() {
    let data = |lang| LanguageData {
        train: Some(corpus(lang, Split::Train)),
        dev: None,
        test: None,
    };
    let corpora = BTreeMap::from([(LanguageTag::EN, data(LanguageTag::EN)), (LanguageTag::RU, data(LanguageTag::RU))]);
    let setup = ExperimentSetup::multilingual([LanguageTag::EN, LanguageTag::RU]).unwrap().with_equalize_total(10);
    let a = prepare_training_data(&setup, &corpora, &TrainingConfig::mt5(11)).unwrap();
    let b = prepare_training_data(&setup, &corpora, &TrainingConfig::mt5(11)).unwrap();
    assert_eq!(a.records.language_counts()[&LanguageTag::EN], 5);
    assert_eq!(a.records.language_counts()[&LanguageTag::RU], 5);
    assert_eq!(a.pairs, b.pairs);
    let refs: usize = a.records.records().iter().map(|r| r.references().len()).sum();
    assert_eq!(a.pairs.len(), refs);
}

#[test]
fn backtranslation_through_english_recovers_russian_references() {
    let translator = StubTranslator::from_file(fixture("translations.tsv")).unwrap();
    let detox = DeleteDetoxifier::new(load_lexicon(fixture("lexicon_en.txt"), LanguageTag::EN).unwrap());
    let ru = corpus(LanguageTag::RU, Split::Test);
    let first_four: Vec<String> = ru.toxic_texts().into_iter().take(4).collect();
    let out = backtranslate_detox(&first_four, LanguageTag::RU, LanguageTag::EN, &translator, &detox, &BacktranslationConfig { batch_size: 3 }).unwrap();
    let references: Vec<&str> = ru.records().iter().take(4).map(|r| r.references()[0].as_str()).collect();
    assert_eq!(out.outputs, references);
    assert_eq!(out.provenance[1].pivot, "Why the f*ck did you post it here?");
}

#[test]
fn unmapped_sentence_fails_backtranslation() {
    let translator = StubTranslator::from_file(fixture("translations.tsv")).unwrap();
    let detox = DeleteDetoxifier::new(load_lexicon(fixture("lexicon_en.txt"), LanguageTag::EN).unwrap());
    let unknown = vec!["Что у этих людей в башке!? походу насрато!".to_string()];
    assert!(backtranslate_detox(&unknown, LanguageTag::RU, LanguageTag::EN, &translator, &detox, &BacktranslationConfig::default()).is_err());
}
