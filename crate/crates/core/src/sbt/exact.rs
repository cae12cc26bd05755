use super::{
    classify_overthinking, guidance::insert_braking_prompt, passthrough, truncated, AnalyzedTrajectory, MaskedExtent,
    SbtConfig, SbtExample, Strategy,
};
use crate::error::Result;

/// Steps to mask from a solution of `len` steps under the few-sentences
/// extent: `ceil(fraction * len)`, clamped to `1..=len`.
pub fn masked_step_count(fraction: f64, len: usize) -> usize {
    if len == 0 {
        return 0;
    }
    // the epsilon keeps 0.15 * 20 = 3.0000000000000004 from rounding up to 4
    let raw = (fraction * len as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(len)
}

/// Solution-level truncation: keep the Foundation plus the next
/// `preserved_solutions - 1` Evolution solutions and mask the head of the
/// following one. Without a following solution nothing is masked.
pub fn build_sbt_e(analyzed: &AnalyzedTrajectory, cfg: &SbtConfig, guidance_seed: u64) -> Result<SbtExample> {
    let traj = &analyzed.parsed;
    traj.foundation()?;
    if !classify_overthinking(&analyzed.metrics, cfg.tau1) {
        return Ok(passthrough(analyzed, Strategy::SbtE));
    }

    let kept = cfg.preserved_solutions.min(traj.solutions.len());
    let preserved_end = traj.solutions[kept - 1].last_step;
    let masked = match traj.solutions.get(kept) {
        Some(next) => match cfg.masked_extent {
            MaskedExtent::FewSentences => masked_step_count(cfg.masked_fraction, next.step_count()),
            MaskedExtent::OneSolution => next.step_count(),
        },
        None => 0,
    };

    let example = truncated(analyzed, Strategy::SbtE, preserved_end, preserved_end + masked);
    Ok(insert_braking_prompt(
        example,
        cfg.guidance_mode,
        &cfg.guidance_templates,
        guidance_seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::MarkerLexicon;
    use crate::metrics::{DetectionLevel, Scorer};
    use crate::sbt::{GuidanceMode, SpanFlag};
    use crate::tokenize::TokenizerMode;
    use crate::trajectory::{ParseOptions, ParsedTrajectory};

    fn analyze(paragraphs: &[&str]) -> AnalyzedTrajectory {
        let parsed =
            ParsedTrajectory::from_think_text("t", &paragraphs.join("\n\n"), "7", &ParseOptions::default()).unwrap();
        let scorer = Scorer::new(
            &MarkerLexicon::default(),
            TokenizerMode::UnicodeWords,
            0.1,
            DetectionLevel::Step,
        )
        .unwrap();
        AnalyzedTrajectory::new(parsed, &scorer).unwrap()
    }

    #[test]
    fn masked_count_rounding() {
        assert_eq!(masked_step_count(0.15, 1), 1);
        assert_eq!(masked_step_count(0.15, 6), 1);
        assert_eq!(masked_step_count(0.15, 7), 2);
        assert_eq!(masked_step_count(0.15, 20), 3);
        assert_eq!(masked_step_count(0.0, 5), 1);
        assert_eq!(masked_step_count(1.0, 5), 5);
    }

    #[test]
    fn foundation_only_passthrough() {
        let a = analyze(&["Compute 3 + 4.", "So the answer is 7."]);
        let ex = build_sbt_e(&a, &SbtConfig::default(), 0).unwrap();
        assert!(!ex.classified_overthinking);
        assert_eq!(ex.spans.len(), 1);
        assert_eq!(ex.spans[0].text, a.parsed.segment.text);
        assert_eq!(ex.spans[0].flag, SpanFlag::Preserved);
    }

    #[test]
    fn single_evolution_masks_nothing() {
        let a = analyze(&["The answer is 7.", "Wait, recheck: 3 + 4 = 7.", "Yes."]);
        assert!(a.metrics.score >= 0.2);
        let ex = build_sbt_e(&a, &SbtConfig::default(), 0).unwrap();
        assert!(ex.classified_overthinking);
        assert_eq!(ex.masked_steps, 0);
        assert_eq!(ex.preserved_steps, 3);
        let flags: Vec<_> = ex.spans.iter().map(|s| s.flag).collect();
        assert_eq!(flags, [SpanFlag::Preserved, SpanFlag::Guidance]);
    }

    #[test]
    fn one_solution_extent() {
        let a = analyze(&[
            "The answer is 7.",
            "Wait, recheck.",
            "But maybe not.",
            "It is 7 again.",
            "Hmm, fine.",
        ]);
        let cfg = SbtConfig {
            masked_extent: MaskedExtent::OneSolution,
            guidance_mode: GuidanceMode::None,
            ..Default::default()
        };
        let ex = build_sbt_e(&a, &cfg, 0).unwrap();
        assert_eq!(ex.preserved_steps, 2);
        assert_eq!(ex.masked_steps, 3);
        assert!(!ex.has_guidance());
        assert!(ex.source_prefix_check);
    }
}
