use serde::{Deserialize, Serialize};

use super::Step;
use crate::tokenize::{tokens, TokenizerMode};

/// Transition phrases that may open an Evolution solution. Deliberately
/// narrower than the marker lexicon used for scoring.
pub const DEFAULT_BOUNDARY_CUES: [&str; 8] = [
    "Wait",
    "Alternatively",
    "However",
    "Hold on",
    "Let me check",
    "Let me verify",
    "Let me try another",
    "But",
];

/// Phrases matched against the first tokens of a step, case-insensitively.
#[derive(Debug, Clone)]
pub struct CueSet {
    phrases: Vec<String>,
    tokenized: Vec<Vec<String>>,
    mode: TokenizerMode,
    max_len: usize,
}

impl CueSet {
    pub fn new<S: AsRef<str>>(phrases: &[S], mode: TokenizerMode) -> Self {
        let mut out = CueSet {
            phrases: Vec::new(),
            tokenized: Vec::new(),
            mode,
            max_len: 0,
        };
        for p in phrases {
            let toks: Vec<String> = tokens(p.as_ref(), mode).map(str::to_lowercase).collect();
            if toks.is_empty() || out.tokenized.contains(&toks) {
                continue;
            }
            out.max_len = out.max_len.max(toks.len());
            out.phrases.push(p.as_ref().to_string());
            out.tokenized.push(toks);
        }
        out
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// The longest cue phrase the text begins with, if any.
    pub fn leading_match(&self, text: &str) -> Option<&str> {
        let head: Vec<String> = tokens(text, self.mode)
            .take(self.max_len)
            .map(str::to_lowercase)
            .collect();
        self.tokenized
            .iter()
            .enumerate()
            .filter(|(_, cue)| head.len() >= cue.len() && head[..cue.len()] == cue[..])
            .max_by_key(|(_, cue)| cue.len())
            .map(|(i, _)| self.phrases[i].as_str())
    }
}

impl Default for CueSet {
    fn default() -> Self {
        CueSet::new(&DEFAULT_BOUNDARY_CUES, TokenizerMode::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Foundation,
    Evolution,
}

/// A run of steps forming one solution attempt. Step indices are 1-based
/// and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSegment {
    pub kind: SolutionKind,
    pub first_step: usize,
    pub last_step: usize,
    pub ordinal: usize,
}

impl SolutionSegment {
    pub fn step_count(&self) -> usize {
        self.last_step + 1 - self.first_step
    }
}

/// Groups steps into one Foundation solution followed by Evolution solutions.
///
/// The Foundation ends just before the first cue-led step that comes after
/// some step with an answer candidate; from there on every cue-led step
/// opens a new Evolution solution. Returns an empty list for empty input.
pub fn segment_solutions(steps: &[Step], cues: &CueSet) -> Vec<SolutionSegment> {
    if steps.is_empty() {
        return Vec::new();
    }
    let mut starts = Vec::new();
    let mut answer_seen = false;
    for (pos, step) in steps.iter().enumerate() {
        let cue_led = pos > 0 && cues.leading_match(&step.raw_text).is_some();
        if cue_led && answer_seen {
            starts.push(pos);
        }
        answer_seen |= !step.answer_candidates.is_empty();
    }

    let mut segments = Vec::with_capacity(starts.len() + 1);
    let mut first = 0;
    for (ordinal, &start) in starts.iter().enumerate() {
        segments.push(segment(ordinal, first, start - 1));
        first = start;
    }
    segments.push(segment(starts.len(), first, steps.len() - 1));
    segments
}

fn segment(ordinal: usize, first: usize, last: usize) -> SolutionSegment {
    SolutionSegment {
        kind: if ordinal == 0 {
            SolutionKind::Foundation
        } else {
            SolutionKind::Evolution
        },
        first_step: first + 1,
        last_step: last + 1,
        ordinal,
    }
}
