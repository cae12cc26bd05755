use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";

/// Tag anomalies observed while locating the think segment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkDiagnostics {
    pub open_tag_count: usize,
    pub close_tag_count: usize,
    pub missing_open_tag: bool,
    pub missing_close_tag: bool,
}

impl ThinkDiagnostics {
    pub fn scan(generation: &str) -> Self {
        let open_tag_count = generation.matches(THINK_OPEN).count();
        let close_tag_count = generation.matches(THINK_CLOSE).count();
        ThinkDiagnostics {
            open_tag_count,
            close_tag_count,
            missing_open_tag: open_tag_count == 0,
            missing_close_tag: close_tag_count == 0,
        }
    }

    pub fn has_multiple_close_tags(&self) -> bool {
        self.close_tag_count > 1
    }
}

/// Borrowed view of a located think segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedThink<'a> {
    pub text: &'a str,
    /// Everything after the first close tag, stray tags included.
    pub post_think: &'a str,
    pub diagnostics: ThinkDiagnostics,
}

/// Takes the text between the first open tag and the first close tag after it.
pub fn extract_think_segment(generation: &str) -> Result<ExtractedThink<'_>> {
    let diagnostics = ThinkDiagnostics::scan(generation);
    let missing = |diagnostics: ThinkDiagnostics| Error::MissingThinkSegment { diagnostics };
    let Some(open) = generation.find(THINK_OPEN) else {
        return Err(missing(diagnostics));
    };
    let body_start = open + THINK_OPEN.len();
    let Some(close_rel) = generation[body_start..].find(THINK_CLOSE) else {
        return Err(missing(diagnostics));
    };
    let body_end = body_start + close_rel;
    Ok(ExtractedThink {
        text: &generation[body_start..body_end],
        post_think: &generation[body_end + THINK_CLOSE.len()..],
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delimits_segment_and_conclusion() {
        let t = extract_think_segment("<think>A B</think>C").unwrap();
        assert_eq!(t.text, "A B");
        assert_eq!(t.post_think, "C");
        assert_eq!(t.diagnostics.close_tag_count, 1);
    }

    #[test]
    fn extra_close_tags_are_reported_not_parsed() {
        let t = extract_think_segment("<think>X</think>Y</think>").unwrap();
        assert_eq!(t.text, "X");
        assert_eq!(t.post_think, "Y</think>");
        assert_eq!(t.diagnostics.close_tag_count, 2);
        assert!(t.diagnostics.has_multiple_close_tags());
    }

    #[test]
    fn untagged_text_is_an_error() {
        let err = extract_think_segment("no tags at all").unwrap_err();
        match err {
            Error::MissingThinkSegment { diagnostics } => {
                assert!(diagnostics.missing_open_tag);
                assert!(diagnostics.missing_close_tag);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn close_without_open_is_missing() {
        let err = extract_think_segment("reasoning</think>answer").unwrap_err();
        assert!(matches!(
            err,
            Error::MissingThinkSegment { diagnostics } if diagnostics.missing_open_tag && diagnostics.close_tag_count == 1
        ));
    }

    #[test]
    fn close_before_open_does_not_pair() {
        assert!(extract_think_segment("</think><think>x").is_err());
    }
}
