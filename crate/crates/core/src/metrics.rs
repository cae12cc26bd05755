//! Overthinking measures.
//!
//! * reasoning efficiency `eta_s = FS / TS` (steps to the first correct
//!   answer over total steps),
//! * token efficiency `eta_t = FT / TT`,
//! * marker ratio `kappa_t` = marker-covered tokens over total tokens,
//! * overthink score `beta * kappa_t + (1 - beta) * (1 - eta)`, where `eta`
//!   is `eta_s` or `eta_t` depending on the detection level.
//!
//! When no step reaches the correct answer both efficiency ratios are 1 and
//! `no_early_correct` is set, so the score is driven by markers alone.

use serde::{Deserialize, Serialize};

use crate::answer::{answers_equal, AnswerForm};
use crate::error::{Error, Result};
use crate::lexicon::{MarkerLexicon, MarkerMatcher, PrefixMarkerScan};
use crate::tokenize::{tokens, TokenizerMode};
use crate::trajectory::{ParsedTrajectory, Step};

pub const DEFAULT_BETA: f64 = 0.1;
pub const BETA_SWEEP: [f64; 4] = [0.05, 0.1, 0.15, 0.2];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionLevel {
    #[default]
    Step,
    Token,
}

impl DetectionLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionLevel::Step => "step",
            DetectionLevel::Token => "token",
        }
    }
}

impl std::str::FromStr for DetectionLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "step" => Ok(DetectionLevel::Step),
            "token" => Ok(DetectionLevel::Token),
            other => Err(format!("unknown detection level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverthinkMetrics {
    pub fs: Option<usize>,
    pub ts: usize,
    pub eta_s: f64,
    pub ft: Option<usize>,
    pub tt: usize,
    pub eta_t: f64,
    #[serde(rename = "marker_tokens")]
    pub marker_token_count: usize,
    pub kappa_t: f64,
    pub beta: f64,
    pub score: f64,
    pub no_early_correct: bool,
    pub detection_level: DetectionLevel,
}

impl OverthinkMetrics {
    pub fn from_counts(
        fs: Option<usize>,
        ts: usize,
        ft: Option<usize>,
        tt: usize,
        marker_token_count: usize,
        beta: f64,
        level: DetectionLevel,
    ) -> Result<Self> {
        let eta_s = reasoning_efficiency_ratio(fs, ts)?;
        let eta_t = match ft {
            Some(ft) => token_efficiency_ratio(ft, tt)?,
            None => {
                check_positive("tt", tt)?;
                1.0
            }
        };
        let kappa_t = overthink_marker_ratio(marker_token_count, tt)?;
        let structural = match level {
            DetectionLevel::Step => eta_s,
            DetectionLevel::Token => eta_t,
        };
        Ok(OverthinkMetrics {
            fs,
            ts,
            eta_s,
            ft,
            tt,
            eta_t,
            marker_token_count,
            kappa_t,
            beta,
            score: overthink_score(structural, kappa_t, beta)?,
            no_early_correct: fs.is_none(),
            detection_level: level,
        })
    }

    /// The efficiency ratio used in the score's structural term.
    pub fn structural_ratio(&self) -> f64 {
        match self.detection_level {
            DetectionLevel::Step => self.eta_s,
            DetectionLevel::Token => self.eta_t,
        }
    }
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidCounts(format!("{name} must be positive")));
    }
    Ok(())
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Domain { name, value });
    }
    Ok(())
}

/// Index of the first step with a candidate equal to `truth`.
pub fn first_correct_step(steps: &[Step], truth: &AnswerForm) -> Option<usize> {
    steps
        .iter()
        .find(|s| s.answer_candidates.iter().any(|c| answers_equal(c, truth)))
        .map(|s| s.index)
}

pub fn reasoning_efficiency_ratio(fs: Option<usize>, ts: usize) -> Result<f64> {
    check_positive("ts", ts)?;
    match fs {
        None => Ok(1.0),
        Some(0) => Err(Error::InvalidCounts("fs must be positive".into())),
        Some(fs) if fs > ts => Err(Error::InvalidCounts(format!("fs = {fs} exceeds ts = {ts}"))),
        Some(fs) => Ok(fs as f64 / ts as f64),
    }
}

pub fn token_efficiency_ratio(ft: usize, tt: usize) -> Result<f64> {
    check_positive("tt", tt)?;
    if ft > tt {
        return Err(Error::InvalidCounts(format!("ft = {ft} exceeds tt = {tt}")));
    }
    Ok(ft as f64 / tt as f64)
}

pub fn overthink_marker_ratio(marker_token_count: usize, tt: usize) -> Result<f64> {
    check_positive("tt", tt)?;
    if marker_token_count > tt {
        return Err(Error::InvalidCounts(format!(
            "marker tokens = {marker_token_count} exceeds tt = {tt}"
        )));
    }
    Ok(marker_token_count as f64 / tt as f64)
}

pub fn overthink_score(eta: f64, kappa_t: f64, beta: f64) -> Result<f64> {
    check_unit("eta", eta)?;
    check_unit("kappa_t", kappa_t)?;
    check_unit("beta", beta)?;
    Ok(beta * kappa_t + (1.0 - beta) * (1.0 - eta))
}

/// Token stream of a think segment with per-step boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryProfile {
    /// Lowercased tokens of the whole segment, in order.
    pub lowered: Vec<String>,
    /// `step_token_ends[k]` = tokens in steps `1..=k+1`.
    pub step_token_ends: Vec<usize>,
    pub first_correct: Option<usize>,
}

impl TrajectoryProfile {
    pub fn new(traj: &ParsedTrajectory, mode: TokenizerMode) -> Self {
        let steps = &traj.segment.steps;
        let mut lowered = Vec::new();
        let mut step_token_ends = Vec::with_capacity(steps.len());
        for step in steps {
            lowered.extend(tokens(&step.raw_text, mode).map(str::to_lowercase));
            step_token_ends.push(lowered.len());
        }
        TrajectoryProfile {
            lowered,
            step_token_ends,
            first_correct: first_correct_step(steps, &traj.truth),
        }
    }

    pub fn step_count(&self) -> usize {
        self.step_token_ends.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.step_token_ends.last().copied().unwrap_or(0)
    }

    /// Tokens in the first `n` steps.
    pub fn tokens_through(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.step_token_ends[n - 1]
        }
    }
}

/// Scoring parameters bound to a compiled lexicon.
#[derive(Debug, Clone)]
pub struct Scorer {
    matcher: MarkerMatcher,
    pub beta: f64,
    pub level: DetectionLevel,
}

impl Scorer {
    pub fn new(lexicon: &MarkerLexicon, mode: TokenizerMode, beta: f64, level: DetectionLevel) -> Result<Self> {
        check_unit("beta", beta)?;
        Ok(Scorer {
            matcher: MarkerMatcher::new(lexicon, mode),
            beta,
            level,
        })
    }

    pub fn matcher(&self) -> &MarkerMatcher {
        &self.matcher
    }

    pub fn tokenizer(&self) -> TokenizerMode {
        self.matcher.mode()
    }

    pub fn profile(&self, traj: &ParsedTrajectory) -> TrajectoryProfile {
        TrajectoryProfile::new(traj, self.tokenizer())
    }

    /// Metrics for the first `steps` steps, computed from scratch.
    pub fn prefix_metrics(&self, profile: &TrajectoryProfile, steps: usize) -> Result<OverthinkMetrics> {
        let tt = profile.tokens_through(steps);
        let markers = self.matcher.covered_tokens(&profile.lowered[..tt]);
        self.metrics_from_markers(profile, steps, markers)
    }

    pub fn metrics(&self, profile: &TrajectoryProfile) -> Result<OverthinkMetrics> {
        self.prefix_metrics(profile, profile.step_count())
    }

    pub fn prefix_scorer<'a>(&'a self, profile: &'a TrajectoryProfile) -> PrefixScorer<'a> {
        PrefixScorer {
            scorer: self,
            profile,
            scan: PrefixMarkerScan::new(&self.matcher),
        }
    }

    fn metrics_from_markers(
        &self,
        profile: &TrajectoryProfile,
        steps: usize,
        markers: usize,
    ) -> Result<OverthinkMetrics> {
        if steps == 0 || steps > profile.step_count() {
            return Err(Error::InvalidCounts(format!(
                "prefix of {steps} steps out of {}",
                profile.step_count()
            )));
        }
        let fs = profile.first_correct.filter(|&fs| fs <= steps);
        let ft = fs.map(|fs| profile.tokens_through(fs));
        OverthinkMetrics::from_counts(
            fs,
            steps,
            ft,
            profile.tokens_through(steps),
            markers,
            self.beta,
            self.level,
        )
    }
}

/// Scores successively longer step prefixes, reusing marker-scan state.
#[derive(Debug, Clone)]
pub struct PrefixScorer<'a> {
    scorer: &'a Scorer,
    profile: &'a TrajectoryProfile,
    scan: PrefixMarkerScan<'a>,
}

impl PrefixScorer<'_> {
    /// `steps` must be non-decreasing across calls.
    pub fn metrics(&mut self, steps: usize) -> Result<OverthinkMetrics> {
        let tt = self.profile.tokens_through(steps.min(self.profile.step_count()));
        let markers = self.scan.covered_up_to(&self.profile.lowered, tt);
        self.scorer.metrics_from_markers(self.profile, steps, markers)
    }
}
