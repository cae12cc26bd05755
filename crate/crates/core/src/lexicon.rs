//! Overthink marker lexicon and longest-match phrase counting.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tokenize::{tokens, TokenizerMode};

/// The built-in marker phrases.
pub const DEFAULT_MARKERS: [&str; 26] = [
    "Another",
    "Backtrack",
    "But",
    "Check",
    "Going back",
    "Hmm",
    "Hmmm",
    "However",
    "Hold on",
    "Instead of",
    "Just to be thorough",
    "Just to make sure",
    "Let me check",
    "Let me just double-check",
    "Let me try another",
    "Let me verify",
    "Maybe",
    "Maybe I can consider",
    "Maybe I should consider",
    "Might",
    "Not sure",
    "Perhaps",
    "Recheck",
    "Retry",
    "Trace back",
    "Wait",
];

pub const DEFAULT_VERSION_TAG: &str = "builtin-26";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerLexicon {
    phrases: Vec<String>,
    version_tag: String,
}

impl Default for MarkerLexicon {
    fn default() -> Self {
        MarkerLexicon::new(DEFAULT_MARKERS, DEFAULT_VERSION_TAG).expect("builtin lexicon is valid")
    }
}

impl MarkerLexicon {
    /// Deduplicates case-insensitively, keeping the first spelling.
    pub fn new<I, S>(phrases: I, version_tag: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = Vec::<String>::new();
        let mut kept = Vec::new();
        for p in phrases {
            let p = p.as_ref().trim();
            if p.is_empty() {
                continue;
            }
            let key = p.to_lowercase();
            if !seen.contains(&key) {
                seen.push(key);
                kept.push(p.to_string());
            }
        }
        if kept.is_empty() {
            return Err(Error::Config("marker lexicon is empty".into()));
        }
        Ok(MarkerLexicon {
            phrases: kept,
            version_tag: version_tag.into(),
        })
    }

    /// One phrase per line; `#` starts a comment.
    pub fn parse(source: &str) -> Result<Self> {
        let phrases = source
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|line| !line.is_empty());
        let digest = Sha256::digest(source.as_bytes());
        let tag = hex::encode(&digest[..6]);
        MarkerLexicon::new(phrases, format!("sha256:{tag}"))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MarkerLexicon::parse(&source)
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<String, usize>,
    terminal: bool,
}

/// Token-level trie over the lexicon phrases. Tokens passed to the matcher
/// must already be lowercased (see [`lowercase_tokens`]).
#[derive(Debug, Clone)]
pub struct MarkerMatcher {
    nodes: Vec<TrieNode>,
    max_len: usize,
    mode: TokenizerMode,
}

impl MarkerMatcher {
    pub fn new(lexicon: &MarkerLexicon, mode: TokenizerMode) -> Self {
        let mut nodes = vec![TrieNode::default()];
        let mut max_len = 0;
        for phrase in lexicon.phrases() {
            let toks: Vec<String> = tokens(phrase, mode).map(str::to_lowercase).collect();
            if toks.is_empty() {
                continue;
            }
            max_len = max_len.max(toks.len());
            let mut node = 0;
            for t in toks {
                node = match nodes[node].children.get(&t) {
                    Some(&next) => next,
                    None => {
                        nodes.push(TrieNode::default());
                        let next = nodes.len() - 1;
                        nodes[node].children.insert(t, next);
                        next
                    }
                };
            }
            nodes[node].terminal = true;
        }
        MarkerMatcher { nodes, max_len, mode }
    }

    pub fn mode(&self) -> TokenizerMode {
        self.mode
    }

    /// Longest phrase length in tokens.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Length of the longest phrase starting at `pos` and ending at or
    /// before `end`; 0 when none matches.
    pub fn longest_at<S: AsRef<str>>(&self, lowered: &[S], pos: usize, end: usize) -> usize {
        let mut node = 0;
        let mut best = 0;
        for (offset, tok) in lowered[pos..end].iter().enumerate() {
            match self.nodes[node].children.get(tok.as_ref()) {
                Some(&next) => node = next,
                None => break,
            }
            if self.nodes[node].terminal {
                best = offset + 1;
            }
        }
        best
    }

    /// Tokens covered by a greedy left-to-right, longest-first scan.
    pub fn covered_tokens<S: AsRef<str>>(&self, lowered: &[S]) -> usize {
        let mut scan = PrefixMarkerScan::new(self);
        scan.covered_up_to(lowered, lowered.len())
    }
}

pub fn lowercase_tokens(tokens: &[&str]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

/// Case-insensitive, longest-match-first, non-overlapping marker count.
pub fn match_markers(tokens: &[&str], matcher: &MarkerMatcher) -> usize {
    matcher.covered_tokens(&lowercase_tokens(tokens))
}

/// Incremental marker counting over growing prefixes of one token stream.
///
/// A match decision at position `p` only looks at `max_len` tokens, so once
/// a prefix reaches `p + max_len` that decision is final and can be kept;
/// the remaining tail is rescanned per query. Results equal a fresh scan of
/// each prefix.
#[derive(Debug, Clone)]
pub struct PrefixMarkerScan<'m> {
    matcher: &'m MarkerMatcher,
    committed_pos: usize,
    committed_count: usize,
    last_end: usize,
}

impl<'m> PrefixMarkerScan<'m> {
    pub fn new(matcher: &'m MarkerMatcher) -> Self {
        PrefixMarkerScan {
            matcher,
            committed_pos: 0,
            committed_count: 0,
            last_end: 0,
        }
    }

    /// Covered-token count for `lowered[..end]`. `end` must not decrease
    /// between calls on the same scan.
    pub fn covered_up_to<S: AsRef<str>>(&mut self, lowered: &[S], end: usize) -> usize {
        assert!(end >= self.last_end, "prefix scan must move forward");
        self.last_end = end;
        let window = self.matcher.max_len.max(1);
        while self.committed_pos + window <= end {
            let m = self.matcher.longest_at(lowered, self.committed_pos, end);
            if m > 0 {
                self.committed_count += m;
                self.committed_pos += m;
            } else {
                self.committed_pos += 1;
            }
        }
        let (mut pos, mut count) = (self.committed_pos, self.committed_count);
        while pos < end {
            let m = self.matcher.longest_at(lowered, pos, end);
            if m > 0 {
                count += m;
                pos += m;
            } else {
                pos += 1;
            }
        }
        count
    }
}
