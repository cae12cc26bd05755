use super::{
    classify_overthinking, guidance::insert_braking_prompt, passthrough, truncated, AnalyzedTrajectory, SbtConfig,
    SbtExample, Strategy,
};
use crate::error::Result;
use crate::metrics::Scorer;

/// Stopping points chosen by the step-wise threshold scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SbtDPlan {
    pub foundation_end: usize,
    /// Last preserved step.
    pub preserved_end: usize,
    /// Last masked step; equals `preserved_end` when nothing is masked.
    pub masked_end: usize,
    /// Every `(prefix step count, score)` evaluated, in evaluation order.
    pub evaluations: Vec<(usize, f64)>,
    pub foundation_score: f64,
}

/// Runs the two threshold loops without building spans.
///
/// The Foundation is always preserved. Each later step is appended while the
/// prefix including it scores below `tau1`; after that, steps are masked
/// while the prefix including them scores below `tau2`.
pub fn plan_sbt_d(analyzed: &AnalyzedTrajectory, scorer: &Scorer, cfg: &SbtConfig) -> Result<SbtDPlan> {
    let foundation_end = analyzed.parsed.foundation()?.last_step;
    let total = analyzed.parsed.step_count();
    let profile = &analyzed.profile;
    let foundation_score = scorer.prefix_metrics(profile, foundation_end)?.score;

    let mut prefix = scorer.prefix_scorer(profile);
    let mut evaluations = Vec::new();
    let mut next = foundation_end + 1;

    let mut preserved_end = foundation_end;
    while next <= total {
        let score = prefix.metrics(next)?.score;
        evaluations.push((next, score));
        if score >= cfg.tau1 {
            break;
        }
        preserved_end = next;
        next += 1;
    }

    let tau2 = cfg.tau2();
    let mut masked_end = preserved_end;
    while next <= total {
        let score = prefix.metrics(next)?.score;
        evaluations.push((next, score));
        if score >= tau2 {
            break;
        }
        masked_end = next;
        next += 1;
    }

    Ok(SbtDPlan {
        foundation_end,
        preserved_end,
        masked_end,
        evaluations,
        foundation_score,
    })
}

pub fn build_sbt_d(
    analyzed: &AnalyzedTrajectory,
    scorer: &Scorer,
    cfg: &SbtConfig,
    guidance_seed: u64,
) -> Result<SbtExample> {
    analyzed.parsed.foundation()?;
    if !classify_overthinking(&analyzed.metrics, cfg.tau1) {
        return Ok(passthrough(analyzed, Strategy::SbtD));
    }
    let plan = plan_sbt_d(analyzed, scorer, cfg)?;
    let mut example = truncated(analyzed, Strategy::SbtD, plan.preserved_end, plan.masked_end);
    example.foundation_exceeds_tau1 = plan.foundation_score >= cfg.tau1;
    Ok(insert_braking_prompt(
        example,
        cfg.guidance_mode,
        &cfg.guidance_templates,
        guidance_seed,
    ))
}
