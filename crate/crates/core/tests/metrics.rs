mod common;

use common::{lowered_phrases, oracle_marker_cover, oracle_prefix_metrics, read_fixture};
use proptest::prelude::*;
use selfbrake::lexicon::{match_markers, PrefixMarkerScan};
use selfbrake::metrics::overthink_score;
use selfbrake::synth::{synth_trajectory, SynthOptions};
use selfbrake::{
    tokenize, DetectionLevel, MarkerLexicon, MarkerMatcher, ParseOptions, ParsedTrajectory, Scorer, TokenizerMode,
};

const MODE: TokenizerMode = TokenizerMode::UnicodeWords;

#[test]
fn synthetic_trajectories_match_oracle() {
    let lexicon = MarkerLexicon::default();
    let phrases = lowered_phrases(lexicon.phrases(), MODE);
    let opts = SynthOptions {
        seed: 11,
        ..Default::default()
    };
    for level in [DetectionLevel::Step, DetectionLevel::Token] {
        let scorer = Scorer::new(&lexicon, MODE, 0.1, level).unwrap();
        for i in 0..150 {
            let t = ParsedTrajectory::parse(&synth_trajectory(&opts, i), &ParseOptions::default()).unwrap();
            let profile = scorer.profile(&t);
            let got = scorer.metrics(&profile).unwrap();
            let want = oracle_prefix_metrics(&t, t.step_count(), &phrases, MODE, 0.1);
            assert_eq!(
                (got.fs, got.ts, got.ft, got.tt),
                (want.fs, want.ts, want.ft, want.tt),
                "record {i}"
            );
            assert_eq!(got.marker_token_count, want.markers, "record {i}");
            assert_eq!(got.eta_s, want.eta_s);
            assert_eq!(got.eta_t, want.eta_t);
            assert_eq!(got.kappa_t, want.kappa_t);
            let score = match level {
                DetectionLevel::Step => want.score_step,
                DetectionLevel::Token => want.score_token,
            };
            assert_eq!(got.score, score, "record {i}");
        }
    }
}

#[test]
fn ft_is_sum_of_step_tokens() {
    let think = read_fixture("divisors_think.txt");
    let t = ParsedTrajectory::from_think_text("d", &think, "24", &ParseOptions::default()).unwrap();
    let scorer = Scorer::new(&MarkerLexicon::default(), MODE, 0.1, DetectionLevel::Token).unwrap();
    let m = scorer.metrics(&scorer.profile(&t)).unwrap();
    let per_step: usize = t.segment.steps[..4]
        .iter()
        .map(|s| tokenize(&s.raw_text, MODE).len())
        .sum();
    assert_eq!(m.fs, Some(4));
    assert_eq!(m.ft, Some(per_step));
    assert_eq!(m.tt, tokenize(&think, MODE).len());
}

#[test]
fn fixture_marker_count_matches_oracle() {
    let think = read_fixture("divisors_think.txt");
    let lexicon = MarkerLexicon::default();
    let matcher = MarkerMatcher::new(&lexicon, MODE);
    let toks = tokenize(&think, MODE);
    let lowered: Vec<String> = toks.iter().map(|t| t.to_lowercase()).collect();
    let want = oracle_marker_cover(&lowered, &lowered_phrases(lexicon.phrases(), MODE));
    assert_eq!(match_markers(&toks, &matcher), want);
    assert!(want >= 8, "{want}");
}

#[test]
fn documented_marker_examples() {
    let matcher = MarkerMatcher::new(&MarkerLexicon::default(), MODE);
    assert_eq!(match_markers(&["Wait", ",", "maybe"], &matcher), 2);
    assert_eq!(match_markers(&["Hold", "on", ",", "hold", "on"], &matcher), 4);
    assert_eq!(match_markers(&["the", "sum", "is", "7"], &matcher), 0);
}

const VOCAB: [&str; 16] = [
    "wait", "maybe", "i", "should", "consider", "can", "hold", "on", "let", "me", "check", "verify", "just", "double",
    "-", "x",
];

proptest! {
    #[test]
    fn marker_scan_matches_exhaustive_search(idx in prop::collection::vec(0..VOCAB.len(), 0..60)) {
        let toks: Vec<&str> = idx.iter().map(|&i| VOCAB[i]).collect();
        let lexicon = MarkerLexicon::default();
        let matcher = MarkerMatcher::new(&lexicon, MODE);
        let lowered: Vec<String> = toks.iter().map(|t| t.to_string()).collect();
        let phrases = lowered_phrases(lexicon.phrases(), MODE);
        prop_assert_eq!(match_markers(&toks, &matcher), oracle_marker_cover(&lowered, &phrases));
    }

    #[test]
    fn incremental_scan_equals_fresh_scan(
        idx in prop::collection::vec(0..VOCAB.len(), 0..60),
        mut cuts in prop::collection::vec(0usize..61, 0..8),
    ) {
        let lowered: Vec<String> = idx.iter().map(|&i| VOCAB[i].to_string()).collect();
        let lexicon = MarkerLexicon::default();
        let matcher = MarkerMatcher::new(&lexicon, MODE);
        let phrases = lowered_phrases(lexicon.phrases(), MODE);
        cuts.iter_mut().for_each(|c| *c = (*c).min(lowered.len()));
        cuts.sort_unstable();
        let mut scan = PrefixMarkerScan::new(&matcher);
        for end in cuts {
            prop_assert_eq!(scan.covered_up_to(&lowered, end), oracle_marker_cover(&lowered[..end], &phrases));
        }
    }

    #[test]
    fn score_bounds_and_collapse(eta in 0.0f64..=1.0, kappa in 0.0f64..=1.0, beta in 0.0f64..=1.0) {
        let s = overthink_score(eta, kappa, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(overthink_score(eta, kappa, 0.0).unwrap(), 1.0 - eta);
        prop_assert_eq!(overthink_score(eta, kappa, 1.0).unwrap(), kappa);
    }
}
