//! Think-segment extraction and structural decomposition.
//!
//! A generation is reduced to its think segment, the segment is tiled into
//! steps, and the steps are grouped into one Foundation solution followed
//! by zero or more Evolution solutions.

mod candidates;
mod solutions;
mod steps;
mod think;

use serde::{Deserialize, Serialize};

pub use candidates::{extract_answer_candidates, MAX_CANDIDATES_PER_STEP};
pub use solutions::{segment_solutions, CueSet, SolutionKind, SolutionSegment, DEFAULT_BOUNDARY_CUES};
pub use steps::{split_steps, StepMode};
pub use think::{extract_think_segment, ExtractedThink, ThinkDiagnostics, THINK_CLOSE, THINK_OPEN};

use crate::answer::{normalize_answer_with, AnswerForm, AnswerOptions};
use crate::error::{Error, Result};
use crate::tokenize::TokenizerMode;

/// One source record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrajectory {
    pub id: String,
    pub problem: String,
    pub ground_truth: String,
    pub generation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_count_hint: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based position in the parent segment.
    pub index: usize,
    /// Content plus trailing separator whitespace.
    pub raw_text: String,
    /// Byte offsets `[start, end)` into the segment text.
    pub char_span: (usize, usize),
    pub leading_cue: Option<String>,
    pub answer_candidates: Vec<AnswerForm>,
}

impl Step {
    pub fn content(&self) -> &str {
        self.raw_text.trim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinkSegment {
    pub text: String,
    pub steps: Vec<Step>,
    pub post_think: String,
}

impl ThinkSegment {
    pub fn parse(text: &str, post_think: &str, opts: &ParseOptions) -> Self {
        let mut steps = split_steps(text, opts.step_mode);
        for step in &mut steps {
            step.leading_cue = opts.cues.leading_match(&step.raw_text).map(str::to_string);
            step.answer_candidates = extract_answer_candidates(&step.raw_text, opts.answer);
        }
        ThinkSegment {
            text: text.to_string(),
            steps,
            post_think: post_think.to_string(),
        }
    }

    /// Byte offset where the first `n` steps end.
    pub fn prefix_end(&self, n: usize) -> usize {
        match n {
            0 => 0,
            n => self.steps[n - 1].char_span.1,
        }
    }

    pub fn prefix_text(&self, n: usize) -> &str {
        &self.text[..self.prefix_end(n)]
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub step_mode: StepMode,
    pub tokenizer: TokenizerMode,
    pub cues: CueSet,
    pub answer: AnswerOptions,
    /// Treat a generation without think tags as one think segment instead
    /// of failing.
    pub allow_untagged: bool,
}

/// A record after structural parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrajectory {
    pub id: String,
    pub segment: ThinkSegment,
    pub solutions: Vec<SolutionSegment>,
    pub truth: AnswerForm,
    pub diagnostics: ThinkDiagnostics,
}

impl ParsedTrajectory {
    pub fn parse(raw: &RawTrajectory, opts: &ParseOptions) -> Result<Self> {
        let (text, post, diagnostics) = match extract_think_segment(&raw.generation) {
            Ok(t) => (t.text, t.post_think, t.diagnostics),
            Err(Error::MissingThinkSegment { diagnostics }) if opts.allow_untagged => {
                (raw.generation.as_str(), "", diagnostics)
            }
            Err(e) => return Err(e),
        };
        let segment = ThinkSegment::parse(text, post, opts);
        if segment.steps.is_empty() {
            return Err(Error::Structure(format!(
                "record `{}` has a blank think segment",
                raw.id
            )));
        }
        let solutions = segment_solutions(&segment.steps, &opts.cues);
        Ok(ParsedTrajectory {
            id: raw.id.clone(),
            truth: normalize_answer_with(&raw.ground_truth, opts.answer),
            segment,
            solutions,
            diagnostics,
        })
    }

    /// Parses a bare think-segment text, e.g. a prefix of another segment.
    pub fn from_think_text(id: &str, text: &str, truth: &str, opts: &ParseOptions) -> Result<Self> {
        let segment = ThinkSegment::parse(text, "", opts);
        if segment.steps.is_empty() {
            return Err(Error::Structure(format!("record `{id}` has a blank think segment")));
        }
        let solutions = segment_solutions(&segment.steps, &opts.cues);
        Ok(ParsedTrajectory {
            id: id.to_string(),
            truth: normalize_answer_with(truth, opts.answer),
            segment,
            solutions,
            diagnostics: ThinkDiagnostics::default(),
        })
    }

    pub fn step_count(&self) -> usize {
        self.segment.steps.len()
    }

    pub fn foundation(&self) -> Result<&SolutionSegment> {
        self.solutions
            .first()
            .filter(|s| s.kind == SolutionKind::Foundation && s.first_step == 1)
            .ok_or_else(|| Error::Structure(format!("record `{}` has no Foundation solution", self.id)))
    }
}
