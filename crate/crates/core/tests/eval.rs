mod common;

use common::fixture;
use proptest::prelude::*;
use selfbrake::eval::{
    adaptive_depth_report, detect_early_exit, evaluate_outputs, render_depth_text, summarize, EvalConfig, EvalSummary,
    ExitSplit,
};
use selfbrake::sbt::{DEFAULT_GUIDANCE_TEMPLATES, STOP_TOKEN};

const TOL: f64 = 0.01;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

#[test]
fn fixture_summaries_match_hand_values() {
    let report = evaluate_outputs(
        &fixture("eval_outputs.jsonl"),
        &fixture("eval_truth.jsonl"),
        &EvalConfig::default(),
    )
    .unwrap();
    let [exit, toy] = report.summaries.as_slice() else {
        panic!("{:?}", report.summaries)
    };

    assert_eq!((toy.benchmark.as_str(), toy.n, toy.questions), ("toy", 4, 2));
    assert!(close(toy.accuracy, 75.0), "{}", toy.accuracy);
    assert!(close(toy.avg_tokens, 25.0));
    assert!(close(toy.avg_steps, 1.25));
    assert!(close(toy.early_exit_fraction, 0.0));

    assert_eq!((exit.benchmark.as_str(), exit.n), ("exit", 4));
    assert!(close(exit.accuracy, 75.0));
    assert!(close(exit.avg_steps, 2.0));
    assert!(close(exit.early_exit_fraction, 50.0));
    assert_eq!((exit.early_exit.n, exit.no_early_exit.n), (2, 2));
    assert!(close(exit.early_exit.accuracy, 100.0));
    assert!(close(exit.no_early_exit.accuracy, 50.0));
    assert!(close(exit.early_exit.avg_tokens, 150.0));
    assert!(close(exit.no_early_exit.avg_tokens, 350.0));

    let flags: Vec<(&str, bool)> = report.records.iter().map(|r| (r.id.as_str(), r.early_exit)).collect();
    assert!(
        flags.contains(&("e4", false)),
        "braking text after the think segment does not count"
    );
}

#[test]
fn unmatched_ids_are_a_join_error() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.jsonl");
    std::fs::write(&truth, "{\"id\": \"q1\", \"answer\": \"5\"}\n").unwrap();
    let err = evaluate_outputs(&fixture("eval_outputs.jsonl"), &truth, &EvalConfig::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("e1") && msg.contains("q2"), "{msg}");
}

#[test]
fn braking_sentence_detection() {
    let t = DEFAULT_GUIDANCE_TEMPLATES;
    assert!(detect_early_exit(
        "<think>so 4.\n\nWait, I've verified my answer. No need to continue thinking.</think>4",
        &t,
        STOP_TOKEN
    ));
    assert!(!detect_early_exit("<think>so 4.</think>4", &t, STOP_TOKEN));
    assert!(!detect_early_exit(
        "<think>so 4.</think>I've verified my answer, no need to continue thinking.",
        &t,
        STOP_TOKEN
    ));
}

fn summary(benchmark: &str, avg_steps: f64) -> EvalSummary {
    let empty = ExitSplit {
        n: 0,
        accuracy: 0.0,
        avg_tokens: 0.0,
    };
    EvalSummary {
        benchmark: benchmark.into(),
        n: 1,
        questions: 1,
        accuracy: 0.0,
        avg_tokens: 0.0,
        avg_steps,
        early_exit_fraction: 0.0,
        early_exit: empty,
        no_early_exit: empty,
    }
}

#[test]
fn depth_ratio() {
    let rows = adaptive_depth_report(&[summary("AIME25", 202.23), summary("GSM8K", 27.78)]);
    assert_eq!(rows[0].benchmark, "GSM8K");
    assert!((rows[1].ratio - 7.3).abs() < 0.05, "{}", rows[1].ratio);
    assert!(render_depth_text(&rows).contains("7.3\u{d7}"));
    assert_eq!(adaptive_depth_report(&[summary("a", 5.0)])[0].ratio, 1.0);
    let same = adaptive_depth_report(&[summary("a", 5.0), summary("b", 5.0)]);
    assert!(same.iter().all(|r| r.ratio == 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn accuracy_ignores_record_order(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let report = evaluate_outputs(&fixture("eval_outputs.jsonl"), &fixture("eval_truth.jsonl"), &EvalConfig::default()).unwrap();
        let mut shuffled = report.records.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(summarize(&shuffled), report.summaries);
    }
}
