//! Answer candidates inside a single step.
//!
//! Boxed expressions win: when a step contains any `\boxed{..}` (or
//! `\fbox{..}`) only those are returned. Otherwise declarations such as
//! "the answer is ..." and sentence-final "= ... ." are collected. Bare
//! numerals are never candidates.

use std::sync::LazyLock;

use regex::Regex;

use crate::answer::{matching_brace, normalize_answer_with, AnswerForm, AnswerOptions};

/// Only the last few candidates of a step are kept.
pub const MAX_CANDIDATES_PER_STEP: usize = 3;
const MAX_DECLARED_LEN: usize = 64;

static DECLARATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\banswers?(?:\s+(?:is|are|should\s+be|would\s+be|must\s+be)|\s*[=:])\s*:?\s*").unwrap()
});

pub fn extract_answer_candidates(step_text: &str, opts: AnswerOptions) -> Vec<AnswerForm> {
    let mut found = boxed_contents(step_text);
    if found.is_empty() {
        found = declared_answers(step_text);
    }
    let skip = found.len().saturating_sub(MAX_CANDIDATES_PER_STEP);
    found
        .into_iter()
        .skip(skip)
        .map(|(_, raw)| normalize_answer_with(raw, opts))
        .filter(|f| !f.normalized.is_empty())
        .collect()
}

fn boxed_contents(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    for cmd in ["\\boxed", "\\fbox"] {
        let mut from = 0;
        while let Some(rel) = text[from..].find(cmd) {
            let at = from + rel;
            let after = at + cmd.len();
            let trimmed = text[after..].trim_start();
            let brace = text.len() - trimmed.len();
            from = after;
            if !trimmed.starts_with('{') {
                continue;
            }
            if let Some(close) = matching_brace(text, brace) {
                out.push((at, &text[brace + 1..close]));
                from = close + 1;
            }
        }
    }
    out.sort_by_key(|&(pos, _)| pos);
    out
}

fn declared_answers(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut declared = Vec::new();
    for m in DECLARATION.find_iter(text) {
        let rest = &text[m.end()..];
        let end = declaration_end(rest);
        declared.push(m.start()..m.end() + end);
        push_declared(&mut out, m.start(), &rest[..end]);
    }
    // "= value." closing a sentence
    let mut prev_end = 0;
    for end in sentence_ends(text) {
        let sentence_start = text[prev_end..end]
            .rfind(['\n', '!', '?'])
            .map_or(prev_end, |i| prev_end + i + 1);
        prev_end = end + 1;
        if let Some(eq) = text[sentence_start..end].rfind('=') {
            let at = sentence_start + eq;
            let value = &text[at + 1..end];
            // "= 7, so ..." is not sentence-final; "$x = 2$" inside a
            // declaration is already covered
            if declaration_end(value) == value.len() && !declared.iter().any(|r| r.contains(&at)) {
                push_declared(&mut out, at, value);
            }
        }
    }
    out.sort_by_key(|&(pos, _)| pos);
    out.dedup();
    out
}

fn push_declared<'a>(out: &mut Vec<(usize, &'a str)>, at: usize, candidate: &'a str) {
    let candidate = candidate.trim();
    if !candidate.is_empty() && candidate.len() <= MAX_DECLARED_LEN && !candidate.contains('\n') && !is_prose(candidate)
    {
        out.push((at, candidate));
    }
}

/// Several chunks with a plain word among them ("8 if we ignore order").
fn is_prose(candidate: &str) -> bool {
    let chunks: Vec<&str> = candidate.split_whitespace().collect();
    chunks.len() > 1
        && chunks
            .iter()
            .any(|c| c.len() >= 2 && c.bytes().all(|b| b.is_ascii_alphabetic()))
}

/// Offsets of periods that end a sentence: followed by whitespace or the end.
fn sentence_ends(text: &str) -> impl Iterator<Item = usize> + '_ {
    text.char_indices().filter_map(move |(i, c)| {
        (c == '.' && text[i + 1..].chars().next().is_none_or(char::is_whitespace)).then_some(i)
    })
}

/// A declared answer runs to the first sentence end, newline, or
/// comment-style break (", " / "; ").
fn declaration_end(rest: &str) -> usize {
    let bytes = rest.as_bytes();
    for (i, c) in rest.char_indices() {
        let next_ws = bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace());
        match c {
            '\n' => return i,
            '.' | ',' | ';' | '!' | '?' if next_ws => return i,
            _ => {}
        }
    }
    rest.len()
}
