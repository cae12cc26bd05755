use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{GuidanceMode, SbtExample, Span, SpanFlag};

pub const STOP_TOKEN: &str = "<stop_overthinking>";

/// Braking sentences. The last two are synthetic paraphrases.
pub const DEFAULT_GUIDANCE_TEMPLATES: [&str; 4] = [
    "Wait, I've gotten the same answer multiple times, time to end the thinking.",
    "I've verified my answer, no need to continue thinking.",
    "Wait, every check gives the same result, so I can stop thinking here.",
    "I'm confident in this answer now, and further checking would be redundant.",
];

/// Per-record seed derived from the run seed and the record id, so a
/// record's template choice does not depend on which other records ran.
pub fn guidance_seed(run_seed: u64, id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(run_seed.to_le_bytes());
    hasher.update(id.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Places a braking prompt right after the preserved prefix, ahead of any
/// masked span. Examples without a preserved/masked boundary (passthrough)
/// and `GuidanceMode::None` are returned unchanged.
pub fn insert_braking_prompt(
    mut example: SbtExample,
    mode: GuidanceMode,
    templates: &[String],
    rng_seed: u64,
) -> SbtExample {
    if !example.classified_overthinking || example.has_guidance() {
        return example;
    }
    let Some(last_preserved) = example.spans.iter().rposition(|s| s.flag == SpanFlag::Preserved) else {
        return example;
    };
    let preserved = &example.spans[last_preserved].text;
    let masked_follows = example.spans[last_preserved + 1..]
        .iter()
        .any(|s| s.flag == SpanFlag::Masked);

    let text = match mode {
        GuidanceMode::None => return example,
        GuidanceMode::SpecialToken => STOP_TOKEN.to_string(),
        GuidanceMode::NaturalLanguage => {
            let usable: Vec<&str> = templates.iter().map(|t| t.trim()).filter(|t| !t.is_empty()).collect();
            if usable.is_empty() {
                return example;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let sentence = usable[rng.random_range(0..usable.len())];
            let trailing_ws = &preserved[preserved.trim_end().len()..];
            let lead = if trailing_ws.is_empty() { "\n\n" } else { "" };
            // repeat the boundary whitespace so the masked step still starts on its own
            let tail = if masked_follows { trailing_ws } else { "" };
            format!("{lead}{sentence}{tail}")
        }
    };
    example
        .spans
        .insert(last_preserved + 1, Span::new(text, SpanFlag::Guidance));
    example
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{DetectionLevel, OverthinkMetrics};
    use crate::sbt::Strategy;

    fn example(spans: Vec<Span>, classified: bool) -> SbtExample {
        SbtExample {
            id: "g".into(),
            spans,
            strategy: Strategy::SbtE,
            classified_overthinking: classified,
            metrics: OverthinkMetrics::from_counts(Some(1), 2, Some(1), 2, 0, 0.1, DetectionLevel::Step).unwrap(),
            truncation_step: Some(1),
            preserved_steps: 1,
            masked_steps: 1,
            source_tokens: 2,
            foundation_exceeds_tau1: false,
            source_prefix_check: true,
        }
    }

    fn boundary() -> SbtExample {
        example(
            vec![
                Span::new("kept step\n\n", SpanFlag::Preserved),
                Span::new("masked step", SpanFlag::Masked),
            ],
            true,
        )
    }

    fn templates() -> Vec<String> {
        DEFAULT_GUIDANCE_TEMPLATES.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn seeded_choice_is_stable() {
        let a = insert_braking_prompt(boundary(), GuidanceMode::NaturalLanguage, &templates(), 42);
        let b = insert_braking_prompt(boundary(), GuidanceMode::NaturalLanguage, &templates(), 42);
        assert_eq!(a, b);
        let flags: Vec<_> = a.spans.iter().map(|s| s.flag).collect();
        assert_eq!(flags, [SpanFlag::Preserved, SpanFlag::Guidance, SpanFlag::Masked]);
        let g = &a.spans[1].text;
        assert!(g.ends_with("\n\n"));
        assert!(DEFAULT_GUIDANCE_TEMPLATES.contains(&g.trim()));
    }

    #[test]
    fn seeds_cover_several_templates() {
        let chosen: std::collections::BTreeSet<String> = (0..64)
            .map(|seed| {
                insert_braking_prompt(boundary(), GuidanceMode::NaturalLanguage, &templates(), seed).spans[1]
                    .text
                    .clone()
            })
            .collect();
        assert!(chosen.len() > 1);
    }

    #[test]
    fn special_token_is_exact() {
        let ex = insert_braking_prompt(boundary(), GuidanceMode::SpecialToken, &[], 0);
        assert_eq!(ex.spans[1].text, "<stop_overthinking>");
        assert_eq!(ex.spans[1].flag, SpanFlag::Guidance);
    }

    #[test]
    fn none_mode_adds_nothing() {
        let ex = insert_braking_prompt(boundary(), GuidanceMode::None, &templates(), 0);
        assert!(!ex.has_guidance());
    }

    #[test]
    fn passthrough_is_left_alone() {
        let pass = example(vec![Span::new("all", SpanFlag::Preserved)], false);
        let ex = insert_braking_prompt(pass.clone(), GuidanceMode::NaturalLanguage, &templates(), 0);
        assert_eq!(ex, pass);
    }

    #[test]
    fn terminal_guidance_gets_separated() {
        let ex = example(vec![Span::new("done", SpanFlag::Preserved)], true);
        let ex = insert_braking_prompt(ex, GuidanceMode::NaturalLanguage, &templates(), 3);
        assert!(ex.spans[1].text.starts_with("\n\n"));
    }

    #[test]
    fn seed_depends_on_id() {
        assert_eq!(guidance_seed(0, "a"), guidance_seed(0, "a"));
        assert_ne!(guidance_seed(0, "a"), guidance_seed(0, "b"));
        assert_ne!(guidance_seed(0, "a"), guidance_seed(1, "a"));
    }
}
