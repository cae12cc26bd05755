//! Step boundaries.
//!
//! Steps tile the segment: each step owns its content plus the whitespace
//! that follows it (the first step also owns any leading whitespace), so
//! concatenating `raw_text` over all steps gives back the segment exactly.

use serde::{Deserialize, Serialize};

use super::Step;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Split on blank lines.
    #[default]
    Paragraph,
    /// Split after `.`, `!` or `?` followed by whitespace, and on blank lines.
    Sentence,
}

impl StepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StepMode::Paragraph => "paragraph",
            StepMode::Sentence => "sentence",
        }
    }
}

impl std::str::FromStr for StepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paragraph" => Ok(StepMode::Paragraph),
            "sentence" => Ok(StepMode::Sentence),
            other => Err(format!("unknown step mode `{other}`")),
        }
    }
}

pub fn split_steps(text: &str, mode: StepMode) -> Vec<Step> {
    let mut steps = Vec::new();
    let mut start = 0;
    for cut in cut_points(text, mode) {
        if has_content(&text[start..cut]) {
            push_step(&mut steps, text, start, cut);
            start = cut;
        }
    }
    if has_content(&text[start..]) {
        push_step(&mut steps, text, start, text.len());
    } else if let Some(last) = steps.last_mut() {
        // trailing whitespace belongs to the final step
        last.char_span.1 = text.len();
        last.raw_text = text[last.char_span.0..].to_string();
    }
    steps
}

fn push_step(steps: &mut Vec<Step>, text: &str, start: usize, end: usize) {
    steps.push(Step {
        index: steps.len() + 1,
        raw_text: text[start..end].to_string(),
        char_span: (start, end),
        leading_cue: None,
        answer_candidates: Vec::new(),
    });
}

fn has_content(s: &str) -> bool {
    s.chars().any(|c| !c.is_whitespace())
}

/// Candidate tile boundaries: byte offsets just past a separator's whitespace
/// run, i.e. at the first character of the following content.
fn cut_points(text: &str, mode: StepMode) -> Vec<usize> {
    let bytes = text.as_bytes();
    let mut cuts = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let boundary = match c {
            '\n' => is_blank_line_ahead(&text[i + 1..]),
            '.' | '!' | '?' if mode == StepMode::Sentence => iter.peek().is_some_and(|&(_, next)| next.is_whitespace()),
            _ => false,
        };
        if boundary {
            let mut j = i + c.len_utf8();
            while j < bytes.len() {
                let ch = text[j..].chars().next().unwrap();
                if !ch.is_whitespace() {
                    break;
                }
                j += ch.len_utf8();
            }
            if j < text.len() {
                cuts.push(j);
            }
            // skip the separator run
            while iter.peek().is_some_and(|&(k, _)| k < j) {
                iter.next();
            }
        }
    }
    cuts
}

/// True when the text after a newline reaches another newline through
/// non-newline whitespace only.
fn is_blank_line_ahead(rest: &str) -> bool {
    for c in rest.chars() {
        match c {
            '\n' => return true,
            c if c.is_whitespace() => continue,
            _ => return false,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contents(text: &str, mode: StepMode) -> Vec<String> {
        split_steps(text, mode)
            .iter()
            .map(|s| s.raw_text.trim().to_string())
            .collect()
    }

    fn reconstruct(text: &str, mode: StepMode) -> String {
        split_steps(text, mode).iter().map(|s| s.raw_text.as_str()).collect()
    }

    #[test]
    fn paragraphs() {
        assert_eq!(contents("p1\n\np2\n\np3", StepMode::Paragraph), ["p1", "p2", "p3"]);
    }

    #[test]
    fn single_block() {
        let steps = split_steps("single block", StepMode::Paragraph);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].index, 1);
        assert_eq!(steps[0].char_span, (0, 12));
    }

    #[test]
    fn single_newline_does_not_split_paragraphs() {
        assert_eq!(contents("a\nb\n\nc", StepMode::Paragraph), ["a\nb", "c"]);
    }

    #[test]
    fn whitespace_only_lines_count_as_blank() {
        assert_eq!(contents("a\n  \t\n\n b", StepMode::Paragraph), ["a", "b"]);
    }

    #[test]
    fn leading_and_trailing_whitespace_is_kept() {
        let text = "\n\n  first\n\nsecond\n\n\n";
        let steps = split_steps(text, StepMode::Paragraph);
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].raw_text, "\n\n  first\n\n");
        assert_eq!(steps[1].raw_text, "second\n\n\n");
        assert_eq!(reconstruct(text, StepMode::Paragraph), text);
    }

    #[test]
    fn blank_input_yields_no_steps() {
        assert!(split_steps("", StepMode::Paragraph).is_empty());
        assert!(split_steps(" \n\n ", StepMode::Sentence).is_empty());
    }

    #[test]
    fn sentences() {
        assert_eq!(
            contents("So x = 3.5 here. Then y! Done? ok", StepMode::Sentence),
            ["So x = 3.5 here.", "Then y!", "Done?", "ok"]
        );
    }

    #[test]
    fn spans_are_ordered_and_tiling() {
        let text = "a. b.\n\nc d. e";
        for mode in [StepMode::Paragraph, StepMode::Sentence] {
            let steps = split_steps(text, mode);
            let mut prev_end = 0;
            for (i, s) in steps.iter().enumerate() {
                assert_eq!(s.index, i + 1);
                assert_eq!(s.char_span.0, prev_end);
                assert_eq!(&text[s.char_span.0..s.char_span.1], s.raw_text);
                prev_end = s.char_span.1;
            }
            assert_eq!(prev_end, text.len());
        }
    }

    #[test]
    fn multibyte_text_reconstructs() {
        let text = "Étape un… ok.\u{3000}Deux\n\n三 步";
        for mode in [StepMode::Paragraph, StepMode::Sentence] {
            assert_eq!(reconstruct(text, mode), text);
        }
    }
}
