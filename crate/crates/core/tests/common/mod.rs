//! Independent re-implementations used as test oracles.

#![allow(dead_code)]

use std::path::PathBuf;

use selfbrake::metrics::first_correct_step;
use selfbrake::{answers_equal, tokenize, ParsedTrajectory, TokenizerMode};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Word segmentation for ASCII text written from the word-boundary rules:
/// letter/digit runs join, `.` and `'` join two letters or two digits, `,`
/// joins two digits, every other non-space character stands alone.
pub fn oracle_words(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_ascii_alphanumeric() {
            out.push(c.to_string());
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        loop {
            if i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
                continue;
            }
            if i + 1 < chars.len() {
                let (prev, mid, next) = (chars[i - 1], chars[i], chars[i + 1]);
                let letters = prev.is_ascii_alphabetic() && next.is_ascii_alphabetic();
                let digits = prev.is_ascii_digit() && next.is_ascii_digit();
                let joins = match mid {
                    '.' | '\'' => letters || digits,
                    ',' | ';' => digits,
                    _ => false,
                };
                if joins {
                    i += 2;
                    continue;
                }
            }
            break;
        }
        out.push(chars[start..i].iter().collect());
    }
    out
}

/// Greedy longest-first marker coverage by trying every phrase at every
/// position.
pub fn oracle_marker_cover(lowered: &[String], phrases: &[Vec<String>]) -> usize {
    let mut pos = 0;
    let mut covered = 0;
    while pos < lowered.len() {
        let mut best = 0;
        for p in phrases {
            if !p.is_empty() && pos + p.len() <= lowered.len() && lowered[pos..pos + p.len()] == p[..] {
                best = best.max(p.len());
            }
        }
        if best > 0 {
            covered += best;
            pos += best;
        } else {
            pos += 1;
        }
    }
    covered
}

pub fn lowered_phrases(phrases: &[String], mode: TokenizerMode) -> Vec<Vec<String>> {
    phrases
        .iter()
        .map(|p| tokenize(p, mode).into_iter().map(str::to_lowercase).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMetrics {
    pub fs: Option<usize>,
    pub ts: usize,
    pub ft: Option<usize>,
    pub tt: usize,
    pub markers: usize,
    pub eta_s: f64,
    pub eta_t: f64,
    pub kappa_t: f64,
    pub score_step: f64,
    pub score_token: f64,
}

/// Metrics of the first `steps` steps, recomputed from the prefix text.
pub fn oracle_prefix_metrics(
    traj: &ParsedTrajectory,
    steps: usize,
    phrases: &[Vec<String>],
    mode: TokenizerMode,
    beta: f64,
) -> OracleMetrics {
    let seg = &traj.segment;
    let text = seg.prefix_text(steps);
    let toks: Vec<String> = tokenize(text, mode).into_iter().map(str::to_lowercase).collect();
    let tt = toks.len();
    let fs = seg.steps[..steps]
        .iter()
        .position(|s| s.answer_candidates.iter().any(|c| answers_equal(c, &traj.truth)))
        .map(|i| i + 1);
    debug_assert_eq!(fs, first_correct_step(&seg.steps, &traj.truth).filter(|&f| f <= steps));
    let ft = fs.map(|f| tokenize(seg.prefix_text(f), mode).len());
    let markers = oracle_marker_cover(&toks, phrases);
    let eta_s = fs.map_or(1.0, |f| f as f64 / steps as f64);
    let eta_t = ft.map_or(1.0, |f| f as f64 / tt as f64);
    let kappa_t = markers as f64 / tt as f64;
    OracleMetrics {
        fs,
        ts: steps,
        ft,
        tt,
        markers,
        eta_s,
        eta_t,
        kappa_t,
        score_step: beta * kappa_t + (1.0 - beta) * (1.0 - eta_s),
        score_token: beta * kappa_t + (1.0 - beta) * (1.0 - eta_t),
    }
}
