//! Proxy tokenizers used for token counts and marker matching.
//!
//! Model tokenizers are not available here, so counts are taken over
//! Unicode word-boundary segments (the default) or whitespace-separated
//! chunks. Ratios built on these counts are comparable within one mode
//! only.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// UAX #29 word boundaries; every punctuation character is its own token.
    #[default]
    UnicodeWords,
    Whitespace,
}

impl TokenizerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenizerMode::UnicodeWords => "unicode_words",
            TokenizerMode::Whitespace => "whitespace",
        }
    }
}

impl std::str::FromStr for TokenizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unicode_words" | "unicode-words" => Ok(TokenizerMode::UnicodeWords),
            "whitespace" => Ok(TokenizerMode::Whitespace),
            other => Err(format!("unknown tokenizer mode `{other}`")),
        }
    }
}

/// Lazily yields tokens of `text` as borrowed slices.
pub fn tokens(text: &str, mode: TokenizerMode) -> Box<dyn Iterator<Item = &str> + '_> {
    match mode {
        TokenizerMode::UnicodeWords => Box::new(
            text.split_word_bounds()
                .filter(|seg| !seg.chars().all(char::is_whitespace)),
        ),
        TokenizerMode::Whitespace => Box::new(text.split_whitespace()),
    }
}

pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<&str> {
    tokens(text, mode).collect()
}

pub fn count_tokens(text: &str, mode: TokenizerMode) -> usize {
    tokens(text, mode).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unicode_words_split_punctuation() {
        assert_eq!(
            tokenize("Wait, check.", TokenizerMode::UnicodeWords),
            vec!["Wait", ",", "check", "."]
        );
    }

    #[test]
    fn whitespace_mode_collapses_runs() {
        assert_eq!(tokenize("a  b", TokenizerMode::Whitespace), vec!["a", "b"]);
    }

    #[test]
    fn hyphenated_words_are_three_tokens() {
        assert_eq!(
            tokenize("double-check", TokenizerMode::UnicodeWords),
            vec!["double", "-", "check"]
        );
    }

    #[test]
    fn decimals_stay_whole() {
        assert_eq!(
            tokenize("x = 3.25", TokenizerMode::UnicodeWords),
            vec!["x", "=", "3.25"]
        );
    }

    #[test]
    fn blank_input_has_no_tokens() {
        assert!(tokenize(" \n\t ", TokenizerMode::UnicodeWords).is_empty());
        assert_eq!(count_tokens("", TokenizerMode::Whitespace), 0);
    }
}
