use serde::{Deserialize, Serialize};

use super::config::FilterPolicy;
use crate::tokenize::{count_tokens, TokenizerMode};
use crate::trajectory::{extract_think_segment, RawTrajectory, ThinkDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Line could not be mapped to a record.
    SchemaError,
    NoThink,
    MultiCloseTag,
    ContextLimit,
    /// Think segment present but structurally unusable (e.g. blank).
    ParseError,
    DuplicateId,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::SchemaError => "schema_error",
            DropReason::NoThink => "no_think",
            DropReason::MultiCloseTag => "multi_close_tag",
            DropReason::ContextLimit => "context_limit",
            DropReason::ParseError => "parse_error",
            DropReason::DuplicateId => "duplicate_id",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenCountSource {
    /// Count supplied by the source record.
    Hint,
    /// Proxy tokenizer over problem plus generation.
    Proxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep { token_count: u64, source: TokenCountSource },
    Drop(DropReason),
}

impl FilterDecision {
    pub fn is_keep(&self) -> bool {
        matches!(self, FilterDecision::Keep { .. })
    }
}

/// Context size used for the length filter.
pub fn context_tokens(raw: &RawTrajectory, tokenizer: TokenizerMode) -> (u64, TokenCountSource) {
    match raw.token_count_hint {
        Some(n) => (n, TokenCountSource::Hint),
        None => (
            (count_tokens(&raw.problem, tokenizer) + count_tokens(&raw.generation, tokenizer)) as u64,
            TokenCountSource::Proxy,
        ),
    }
}

/// Checks run in a fixed order (missing think segment, extra close tags,
/// length) and the first failure names the drop reason.
pub fn filter_record(raw: &RawTrajectory, policy: &FilterPolicy, tokenizer: TokenizerMode) -> FilterDecision {
    if policy.require_think_segment && extract_think_segment(&raw.generation).is_err() {
        return FilterDecision::Drop(DropReason::NoThink);
    }
    if policy.reject_multiple_close_tags && ThinkDiagnostics::scan(&raw.generation).has_multiple_close_tags() {
        return FilterDecision::Drop(DropReason::MultiCloseTag);
    }
    let (token_count, source) = context_tokens(raw, tokenizer);
    if token_count > policy.max_context_tokens {
        return FilterDecision::Drop(DropReason::ContextLimit);
    }
    FilterDecision::Keep { token_count, source }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(generation: &str, hint: Option<u64>) -> RawTrajectory {
        RawTrajectory {
            id: "f".into(),
            problem: "What is 3 + 4?".into(),
            ground_truth: "7".into(),
            generation: generation.into(),
            token_count_hint: hint,
        }
    }

    fn decide(r: &RawTrajectory) -> FilterDecision {
        filter_record(r, &FilterPolicy::default(), TokenizerMode::UnicodeWords)
    }

    #[test]
    fn keeps_normal_records() {
        let d = decide(&raw("<think>3 + 4 = 7</think>7", None));
        let expected = tokens_of("What is 3 + 4?") + tokens_of("<think>3 + 4 = 7</think>7");
        assert_eq!(
            d,
            FilterDecision::Keep {
                token_count: expected,
                source: TokenCountSource::Proxy
            }
        );
    }

    fn tokens_of(s: &str) -> u64 {
        count_tokens(s, TokenizerMode::UnicodeWords) as u64
    }

    #[test]
    fn context_limit_uses_hint() {
        assert_eq!(
            decide(&raw("<think>short</think>", Some(20_000))),
            FilterDecision::Drop(DropReason::ContextLimit)
        );
        assert!(decide(&raw("<think>short</think>", Some(16_384))).is_keep());
    }

    #[test]
    fn context_limit_by_proxy() {
        let long = format!("<think>{}</think>", "word ".repeat(20_000));
        assert_eq!(
            decide(&raw(&long, None)),
            FilterDecision::Drop(DropReason::ContextLimit)
        );
    }

    #[test]
    fn extra_close_tags() {
        assert_eq!(
            decide(&raw("<think>a</think> b </think>", None)),
            FilterDecision::Drop(DropReason::MultiCloseTag)
        );
        let lenient = FilterPolicy {
            reject_multiple_close_tags: false,
            ..Default::default()
        };
        assert!(filter_record(
            &raw("<think>a</think> b </think>", None),
            &lenient,
            TokenizerMode::Whitespace
        )
        .is_keep());
    }

    #[test]
    fn missing_think_segment() {
        assert_eq!(decide(&raw("no tags", None)), FilterDecision::Drop(DropReason::NoThink));
        let lenient = FilterPolicy {
            require_think_segment: false,
            ..Default::default()
        };
        assert!(filter_record(&raw("no tags", None), &lenient, TokenizerMode::Whitespace).is_keep());
    }
}
