use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::build::{companion_path, AnalysisRecord, DatasetRecord, StatsFile};
use super::records::{load_records, JsonlLines};
use super::stats::{DatasetStats, StatsAccumulator};
use super::{sha256_hex, Pipeline};
use crate::error::{Error, Result};
use crate::sbt::SpanFlag;
use crate::trajectory::extract_think_segment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportSource {
    Dataset,
    Metrics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityIssue {
    pub line: usize,
    pub id: String,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub source: ReportSource,
    pub stats: DatasetStats,
    /// Whether the recomputed figures equal the companion stats file, when one exists.
    pub matches_build_stats: Option<bool>,
    pub issues: Vec<IntegrityIssue>,
}

impl StatsReport {
    pub fn render_text(&self) -> String {
        let mut out = self.stats.render_text();
        let _ = writeln!(out);
        match self.matches_build_stats {
            Some(true) => out.push_str("build-time stats: match\n"),
            Some(false) => out.push_str("build-time stats: MISMATCH\n"),
            None => out.push_str("build-time stats: not found\n"),
        }
        if self.issues.is_empty() {
            out.push_str("integrity: ok\n");
        } else {
            let _ = writeln!(out, "integrity: {} issue(s)", self.issues.len());
            for i in &self.issues {
                let _ = writeln!(out, "  line {} ({}): {}", i.line, i.id, i.problem);
            }
        }
        out
    }
}

/// Recomputes statistics from a built dataset or metrics dump and checks
/// each dataset record: span order, the stored prefix digest, and, when
/// `source` is given, that the preserved and masked text is a byte prefix
/// of the source think segment.
pub fn stats_report(dataset: &Path, source: Option<(&Path, &Pipeline)>) -> Result<StatsReport> {
    let think_by_id = match source {
        Some((path, pipeline)) => Some(source_think_segments(path, pipeline)?),
        None => None,
    };
    let mut acc = StatsAccumulator::new();
    let mut issues = Vec::new();
    let mut kind = None;
    let mut seen = HashSet::new();

    for item in JsonlLines::open(dataset)? {
        let (line, text) = item.map_err(|e| match e {
            Error::Schema { line, message } => Error::Format { line, message },
            other => other,
        })?;
        let format_err = |message: String| Error::Format { line, message };
        let value: Value = serde_json::from_str(&text).map_err(|e| format_err(format!("invalid JSON: {e}")))?;
        let this_kind = match &value {
            Value::Object(o) if o.contains_key("spans") => ReportSource::Dataset,
            Value::Object(o) if o.contains_key("metrics") => ReportSource::Metrics,
            _ => return Err(format_err("not a dataset or metrics record".into())),
        };
        if *kind.get_or_insert(this_kind) != this_kind {
            return Err(format_err("dataset and metrics records are mixed".into()));
        }
        let mut issue = |id: &str, problem: String| {
            issues.push(IntegrityIssue {
                line,
                id: id.to_string(),
                problem,
            })
        };
        match this_kind {
            ReportSource::Dataset => {
                let record: DatasetRecord =
                    serde_json::from_value(value).map_err(|e| format_err(format!("bad dataset record: {e}")))?;
                for problem in check_record(&record) {
                    issue(&record.id, problem);
                }
                if let Some(map) = &think_by_id {
                    let source_text: String = record
                        .spans
                        .iter()
                        .filter(|s| s.flag != SpanFlag::Guidance)
                        .map(|s| s.text.as_str())
                        .collect();
                    match map.get(&record.id) {
                        None => issue(&record.id, "id not found in source".into()),
                        Some(think) if !think.starts_with(&source_text) => {
                            issue(&record.id, "prefix check failed against source think segment".into())
                        }
                        Some(_) => {}
                    }
                }
                if !seen.insert(record.id.clone()) {
                    issue(&record.id, "duplicate id".into());
                }
                acc.keep(&record.summary());
            }
            ReportSource::Metrics => {
                let record: AnalysisRecord =
                    serde_json::from_value(value).map_err(|e| format_err(format!("bad metrics record: {e}")))?;
                if !seen.insert(record.id.clone()) {
                    issue(&record.id, "duplicate id".into());
                }
                acc.keep(&record.summary());
            }
        }
    }

    let companion = companion_path(dataset, ".stats.json");
    let build_stats = if companion.exists() {
        let text = std::fs::read_to_string(&companion).map_err(|e| Error::io(&companion, e))?;
        let file: StatsFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            line: e.line(),
            message: format!("{}: {e}", companion.display()),
        })?;
        Some(file.stats)
    } else {
        None
    };
    if let Some(build) = &build_stats {
        acc.set_dropped(build.dropped_by_reason.clone());
    }
    let stats = acc.finish();
    Ok(StatsReport {
        source: kind.unwrap_or(ReportSource::Dataset),
        matches_build_stats: build_stats.map(|b| b == stats),
        stats,
        issues,
    })
}

fn check_record(record: &DatasetRecord) -> Vec<String> {
    let mut problems = Vec::new();
    let source_text: String = record
        .spans
        .iter()
        .filter(|s| s.flag != SpanFlag::Guidance)
        .map(|s| s.text.as_str())
        .collect();
    if sha256_hex(&source_text) != record.prefix_sha256 {
        problems.push("prefix digest mismatch: span text was modified".into());
    }
    let flags: Vec<SpanFlag> = record.spans.iter().map(|s| s.flag).collect();
    let well_ordered = matches!(
        flags.as_slice(),
        [SpanFlag::Preserved]
            | [SpanFlag::Preserved, SpanFlag::Guidance]
            | [SpanFlag::Preserved, SpanFlag::Masked]
            | [SpanFlag::Preserved, SpanFlag::Guidance, SpanFlag::Masked]
    );
    if !well_ordered {
        problems.push(format!("unexpected span layout {flags:?}"));
    }
    if !record.classified && (flags != [SpanFlag::Preserved] || record.masked_steps != 0) {
        problems.push("unclassified record is not a passthrough".into());
    }
    let has_masked = flags.contains(&SpanFlag::Masked);
    if has_masked != (record.masked_steps > 0) {
        problems.push("masked span disagrees with masked_steps".into());
    }
    problems
}

fn source_think_segments(path: &Path, pipeline: &Pipeline) -> Result<HashMap<String, String>> {
    let allow_untagged = pipeline.parse_options().allow_untagged;
    let mut map = HashMap::new();
    for raw in load_records(path, &pipeline.config().schema_map)? {
        let Ok(raw) = raw else { continue };
        let think = match extract_think_segment(&raw.generation) {
            Ok(t) => t.text.to_string(),
            Err(_) if allow_untagged => raw.generation.clone(),
            Err(_) => continue,
        };
        map.entry(raw.id).or_insert(think);
    }
    Ok(map)
}
