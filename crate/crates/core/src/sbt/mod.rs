//! Adaptive-length training example construction.
//!
//! Two truncation strategies share one output shape: a preserved prefix of
//! the think segment, an optional braking prompt, and an optional masked
//! continuation that is kept for exposure but excluded from the loss.
//!
//! * [`build_sbt_e`] cuts at solution boundaries: Foundation plus the first
//!   Evolution solution(s), then the head of the next Evolution masked.
//! * [`build_sbt_d`] grows the preserved prefix step by step while its
//!   overthink score stays below `tau1`, then masks steps while the score
//!   stays below `tau2 = tau1 + tau2_delta`.
//!
//! Trajectories whose whole-segment score is below `tau1` pass through
//! unchanged.

mod dynamic;
mod exact;
mod guidance;

use serde::{Deserialize, Serialize};

pub use dynamic::{build_sbt_d, plan_sbt_d, SbtDPlan};
pub use exact::{build_sbt_e, masked_step_count};
pub use guidance::{guidance_seed, insert_braking_prompt, DEFAULT_GUIDANCE_TEMPLATES, STOP_TOKEN};

use crate::error::{Error, Result};
use crate::metrics::{DetectionLevel, OverthinkMetrics, Scorer, TrajectoryProfile, DEFAULT_BETA};
use crate::trajectory::{ParsedTrajectory, StepMode};

pub const DEFAULT_TAU1: f64 = 0.2;
pub const DEFAULT_TAU2_DELTA: f64 = 0.05;
pub const DEFAULT_MASKED_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "sbt-e")]
    SbtE,
    #[default]
    #[serde(rename = "sbt-d")]
    SbtD,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SbtE => "sbt-e",
            Strategy::SbtD => "sbt-d",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sbt-e" => Ok(Strategy::SbtE),
            "sbt-d" => Ok(Strategy::SbtD),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskedExtent {
    /// Leading `masked_fraction` of the next solution's steps, at least one.
    #[default]
    FewSentences,
    /// The whole next solution.
    OneSolution,
}

impl std::str::FromStr for MaskedExtent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "few_sentences" => Ok(MaskedExtent::FewSentences),
            "one_solution" => Ok(MaskedExtent::OneSolution),
            other => Err(format!("unknown masked extent `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    #[default]
    NaturalLanguage,
    SpecialToken,
    None,
}

impl std::str::FromStr for GuidanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "natural_language" => Ok(GuidanceMode::NaturalLanguage),
            "special_token" => Ok(GuidanceMode::SpecialToken),
            "none" => Ok(GuidanceMode::None),
            other => Err(format!("unknown guidance mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbtConfig {
    pub beta: f64,
    pub tau1: f64,
    pub tau2_delta: f64,
    pub strategy: Strategy,
    pub preserved_solutions: usize,
    pub masked_extent: MaskedExtent,
    pub masked_fraction: f64,
    pub guidance_mode: GuidanceMode,
    pub guidance_templates: Vec<String>,
    pub step_mode: StepMode,
    pub detection_level: DetectionLevel,
}

impl Default for SbtConfig {
    fn default() -> Self {
        SbtConfig {
            beta: DEFAULT_BETA,
            tau1: DEFAULT_TAU1,
            tau2_delta: DEFAULT_TAU2_DELTA,
            strategy: Strategy::default(),
            preserved_solutions: 2,
            masked_extent: MaskedExtent::default(),
            masked_fraction: DEFAULT_MASKED_FRACTION,
            guidance_mode: GuidanceMode::default(),
            guidance_templates: DEFAULT_GUIDANCE_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            step_mode: StepMode::default(),
            detection_level: DetectionLevel::default(),
        }
    }
}

impl SbtConfig {
    pub fn tau2(&self) -> f64 {
        self.tau1 + self.tau2_delta
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta = {} must lie in [0, 1]", self.beta));
        }
        if !(self.tau1 > 0.0 && self.tau1 < 1.0) {
            return bad(format!("tau1 = {} must lie in (0, 1)", self.tau1));
        }
        if self.tau2_delta < 0.0 || self.tau1 + self.tau2_delta > 1.0 {
            return bad(format!(
                "tau2_delta = {} must be >= 0 with tau1 + tau2_delta <= 1",
                self.tau2_delta
            ));
        }
        if self.preserved_solutions == 0 {
            return bad("preserved_solutions must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.masked_fraction) {
            return bad(format!("masked_fraction = {} must lie in [0, 1]", self.masked_fraction));
        }
        if self.guidance_mode == GuidanceMode::NaturalLanguage
            && self.guidance_templates.iter().all(|t| t.trim().is_empty())
        {
            return bad("natural_language guidance needs at least one template".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanFlag {
    Preserved,
    Masked,
    Guidance,
}

impl SpanFlag {
    /// Masked spans are excluded from the loss; preserved text and braking
    /// prompts are trained on.
    pub fn is_trainable(self) -> bool {
        !matches!(self, SpanFlag::Masked)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub text: String,
    pub flag: SpanFlag,
}

impl Span {
    fn new(text: impl Into<String>, flag: SpanFlag) -> Self {
        Span {
            text: text.into(),
            flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbtExample {
    pub id: String,
    pub spans: Vec<Span>,
    pub strategy: Strategy,
    pub classified_overthinking: bool,
    pub metrics: OverthinkMetrics,
    /// Last preserved step when the trajectory was truncated.
    pub truncation_step: Option<usize>,
    pub preserved_steps: usize,
    pub masked_steps: usize,
    /// Tokens of the preserved and masked source text (guidance excluded).
    pub source_tokens: usize,
    /// SBT-D only: the Foundation prefix alone already scores at or above `tau1`.
    pub foundation_exceeds_tau1: bool,
    pub source_prefix_check: bool,
}

impl SbtExample {
    /// Concatenated non-guidance span text.
    pub fn source_text(&self) -> String {
        self.spans
            .iter()
            .filter(|s| s.flag != SpanFlag::Guidance)
            .map(|s| s.text.as_str())
            .collect()
    }

    pub fn full_text(&self) -> String {
        self.spans.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn has_guidance(&self) -> bool {
        self.spans.iter().any(|s| s.flag == SpanFlag::Guidance)
    }
}

/// A parsed trajectory with its token profile and whole-segment metrics.
#[derive(Debug, Clone)]
pub struct AnalyzedTrajectory {
    pub parsed: ParsedTrajectory,
    pub profile: TrajectoryProfile,
    pub metrics: OverthinkMetrics,
}

impl AnalyzedTrajectory {
    pub fn new(parsed: ParsedTrajectory, scorer: &Scorer) -> Result<Self> {
        let profile = scorer.profile(&parsed);
        let metrics = scorer.metrics(&profile)?;
        Ok(AnalyzedTrajectory {
            parsed,
            profile,
            metrics,
        })
    }
}

pub fn classify_overthinking(metrics: &OverthinkMetrics, tau1: f64) -> bool {
    metrics.score >= tau1
}

/// Dispatches on `cfg.strategy`.
pub fn build_example(
    analyzed: &AnalyzedTrajectory,
    scorer: &Scorer,
    cfg: &SbtConfig,
    guidance_seed: u64,
) -> Result<SbtExample> {
    match cfg.strategy {
        Strategy::SbtE => build_sbt_e(analyzed, cfg, guidance_seed),
        Strategy::SbtD => build_sbt_d(analyzed, scorer, cfg, guidance_seed),
    }
}

fn passthrough(analyzed: &AnalyzedTrajectory, strategy: Strategy) -> SbtExample {
    let seg = &analyzed.parsed.segment;
    SbtExample {
        id: analyzed.parsed.id.clone(),
        spans: vec![Span::new(seg.text.clone(), SpanFlag::Preserved)],
        strategy,
        classified_overthinking: false,
        metrics: analyzed.metrics,
        truncation_step: None,
        preserved_steps: seg.steps.len(),
        masked_steps: 0,
        source_tokens: analyzed.profile.total_tokens(),
        foundation_exceeds_tau1: false,
        source_prefix_check: true,
    }
}

/// Preserved steps `1..=preserved_end`, masked `preserved_end+1..=masked_end`.
fn truncated(analyzed: &AnalyzedTrajectory, strategy: Strategy, preserved_end: usize, masked_end: usize) -> SbtExample {
    let seg = &analyzed.parsed.segment;
    let cut = seg.prefix_end(preserved_end);
    let mut spans = vec![Span::new(&seg.text[..cut], SpanFlag::Preserved)];
    if masked_end > preserved_end {
        spans.push(Span::new(&seg.text[cut..seg.prefix_end(masked_end)], SpanFlag::Masked));
    }
    let mut example = SbtExample {
        id: analyzed.parsed.id.clone(),
        spans,
        strategy,
        classified_overthinking: true,
        metrics: analyzed.metrics,
        truncation_step: Some(preserved_end),
        preserved_steps: preserved_end,
        masked_steps: masked_end - preserved_end,
        source_tokens: analyzed.profile.tokens_through(masked_end),
        foundation_exceeds_tau1: false,
        source_prefix_check: false,
    };
    example.source_prefix_check = seg.text.starts_with(&example.source_text());
    example
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = SbtConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.tau1, 0.2);
        assert!((cfg.tau2() - 0.25).abs() < 1e-15);
        assert_eq!(cfg.beta, 0.1);
        assert_eq!(cfg.guidance_templates.len(), 4);
    }

    #[test]
    fn invalid_configs() {
        let check = |f: fn(&mut SbtConfig)| {
            let mut cfg = SbtConfig::default();
            f(&mut cfg);
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        };
        check(|c| c.tau1 = 0.0);
        check(|c| c.tau1 = 1.0);
        check(|c| c.tau2_delta = -0.01);
        check(|c| {
            c.tau1 = 0.98;
            c.tau2_delta = 0.05;
        });
        check(|c| c.guidance_templates.clear());
        check(|c| c.preserved_solutions = 0);
        check(|c| c.beta = 1.5);
    }

    #[test]
    fn empty_templates_ok_without_natural_language() {
        let cfg = SbtConfig {
            guidance_mode: GuidanceMode::SpecialToken,
            guidance_templates: vec![],
            ..Default::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn classification_threshold() {
        let m = |score: f64| OverthinkMetrics {
            fs: None,
            ts: 1,
            eta_s: 1.0,
            ft: None,
            tt: 1,
            eta_t: 1.0,
            marker_token_count: 0,
            kappa_t: 0.0,
            beta: 0.1,
            score,
            no_early_correct: true,
            detection_level: DetectionLevel::Step,
        };
        assert!(classify_overthinking(&m(0.23), 0.2));
        assert!(classify_overthinking(&m(0.2), 0.2));
        for tau in [1e-9, 0.05, 0.2, 0.5, 0.99] {
            assert!(!classify_overthinking(&m(0.0), tau));
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [Strategy::SbtE, Strategy::SbtD] {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
        assert_eq!("SBT_E".parse::<Strategy>().unwrap(), Strategy::SbtE);
    }
}
