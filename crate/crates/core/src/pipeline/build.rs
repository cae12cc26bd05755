use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::filter::{filter_record, DropReason, FilterDecision, TokenCountSource};
use super::records::parse_record;
use super::stats::{DatasetStats, RecordSummary, StatsAccumulator};
use super::{for_each_ordered, sha256_hex, Pipeline, PipelineConfig, Prepared, Rejection};
use crate::error::{Error, Result};
use crate::metrics::OverthinkMetrics;
use crate::sbt::{classify_overthinking, SbtExample, Span, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

/// One line of a built dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub strategy: Strategy,
    pub classified: bool,
    pub spans: Vec<Span>,
    pub metrics: OverthinkMetrics,
    pub truncation_step: Option<usize>,
    pub preserved_steps: usize,
    pub masked_steps: usize,
    pub source_tokens: usize,
    pub foundation_exceeds_tau1: bool,
    pub token_count_source: TokenCountSource,
    /// Digest of the preserved and masked text, for integrity checks.
    pub prefix_sha256: String,
}

impl DatasetRecord {
    pub fn new(example: SbtExample, token_count_source: TokenCountSource) -> Self {
        let prefix_sha256 = sha256_hex(&example.source_text());
        DatasetRecord {
            id: example.id,
            strategy: example.strategy,
            classified: example.classified_overthinking,
            spans: example.spans,
            metrics: example.metrics,
            truncation_step: example.truncation_step,
            preserved_steps: example.preserved_steps,
            masked_steps: example.masked_steps,
            source_tokens: example.source_tokens,
            foundation_exceeds_tau1: example.foundation_exceeds_tau1,
            token_count_source,
            prefix_sha256,
        }
    }

    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            classified: self.classified,
            metrics: self.metrics,
            preserved_steps: self.preserved_steps,
            masked_steps: self.masked_steps,
            source_tokens: self.source_tokens,
            foundation_exceeds_tau1: self.foundation_exceeds_tau1,
            token_count_source: self.token_count_source,
        }
    }
}

/// One line of an `analyze` metrics dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub id: String,
    pub classified: bool,
    pub metrics: OverthinkMetrics,
    pub token_count_source: TokenCountSource,
}

impl AnalysisRecord {
    /// An untruncated record: everything preserved, nothing masked.
    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            classified: self.classified,
            metrics: self.metrics,
            preserved_steps: self.metrics.ts,
            masked_steps: 0,
            source_tokens: self.metrics.tt,
            foundation_exceeds_tau1: false,
            token_count_source: self.token_count_source,
        }
    }
}

/// Statistics written next to a dataset or metrics dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub stats: DatasetStats,
    pub lexicon: String,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub stats: DatasetStats,
    pub rejections: Vec<Rejection>,
    /// Companion statistics files, JSON then text.
    pub stats_paths: Option<(PathBuf, PathBuf)>,
}

impl BuildSummary {
    pub fn record_errors(&self) -> usize {
        self.rejections.iter().filter(|r| r.is_error()).count()
    }
}

/// `out.jsonl` -> `out.jsonl<suffix>`.
pub fn companion_path(path: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_line<T: Serialize>(out: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))
}

fn write_stats(output: &Path, pipeline: &Pipeline, stats: &DatasetStats) -> Result<(PathBuf, PathBuf)> {
    let json_path = companion_path(output, ".stats.json");
    let text_path = companion_path(output, ".stats.txt");
    let file = StatsFile {
        stats: stats.clone(),
        lexicon: pipeline.lexicon().version_tag().to_string(),
        config: pipeline.config().clone(),
    };
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    std::fs::write(&text_path, stats.render_text()).map_err(|e| Error::io(&text_path, e))?;
    Ok((json_path, text_path))
}

fn log_rejection(r: &Rejection) {
    let id = r.id.as_deref().unwrap_or("-");
    if r.is_error() {
        log::warn!("line {} ({id}): {}: {}", r.line, r.reason.as_str(), r.message);
    } else {
        log::debug!("line {} ({id}): dropped: {}", r.line, r.message);
    }
}

/// Shared driver: prepare every line, enforce unique ids, and hand kept
/// records to `emit` in input order.
fn run_prepared<T, W, E>(
    input: &Path,
    pipeline: &Pipeline,
    opts: &RunOptions,
    work: W,
    mut emit: E,
) -> Result<(StatsAccumulator, Vec<Rejection>)>
where
    T: Send,
    W: Fn(Prepared) -> Result<T, (DropReason, String)> + Sync,
    E: FnMut(T, &mut StatsAccumulator) -> Result<()>,
{
    let mut acc = StatsAccumulator::new();
    let mut rejections = Vec::new();
    let mut seen = HashSet::new();
    for_each_ordered(
        input,
        opts.workers,
        |line| -> Result<(usize, String, T), Rejection> {
            let text = line.text()?;
            let prepared = pipeline.prepare_line(line.line_no, text)?;
            let id = prepared.analyzed.parsed.id.clone();
            work(prepared)
                .map(|t| (line.line_no, id.clone(), t))
                .map_err(|(reason, message)| Rejection {
                    line: line.line_no,
                    id: Some(id),
                    reason,
                    message,
                })
        },
        |result| {
            let rejection = match result {
                Ok((line, id, value)) => {
                    if seen.insert(id.clone()) {
                        return emit(value, &mut acc);
                    }
                    Rejection {
                        line,
                        message: format!("id `{id}` already emitted"),
                        id: Some(id),
                        reason: DropReason::DuplicateId,
                    }
                }
                Err(r) => r,
            };
            log_rejection(&rejection);
            acc.drop_record(rejection.reason);
            rejections.push(rejection);
            Ok(())
        },
    )?;
    Ok((acc, rejections))
}

/// Writes one dataset record per kept input record, plus
/// `<output>.stats.json` and `<output>.stats.txt`.
pub fn build_dataset(input: &Path, output: &Path, pipeline: &Pipeline, opts: &RunOptions) -> Result<BuildSummary> {
    let mut out = create(output)?;
    let (acc, rejections) = run_prepared(
        input,
        pipeline,
        opts,
        |prepared| {
            pipeline
                .build(&prepared)
                .map(|ex| DatasetRecord::new(ex, prepared.token_count_source))
                .map_err(|e| (DropReason::ParseError, e.to_string()))
        },
        |record, acc| {
            acc.keep(&record.summary());
            write_line(&mut out, output, &record)
        },
    )?;
    out.flush().map_err(|e| Error::io(output, e))?;
    let stats = acc.finish();
    let stats_paths = write_stats(output, pipeline, &stats)?;
    Ok(BuildSummary {
        stats,
        rejections,
        stats_paths: Some(stats_paths),
    })
}

/// Writes per-record metrics without building examples, plus the same
/// companion statistics files as [`build_dataset`].
pub fn analyze_corpus(input: &Path, output: &Path, pipeline: &Pipeline, opts: &RunOptions) -> Result<BuildSummary> {
    let tau1 = pipeline.config().sbt.tau1;
    let mut out = create(output)?;
    let (acc, rejections) = run_prepared(
        input,
        pipeline,
        opts,
        |prepared| {
            let metrics = prepared.analyzed.metrics;
            Ok(AnalysisRecord {
                id: prepared.analyzed.parsed.id,
                classified: classify_overthinking(&metrics, tau1),
                metrics,
                token_count_source: prepared.token_count_source,
            })
        },
        |record, acc| {
            acc.keep(&record.summary());
            write_line(&mut out, output, &record)
        },
    )?;
    out.flush().map_err(|e| Error::io(output, e))?;
    let stats = acc.finish();
    let stats_paths = write_stats(output, pipeline, &stats)?;
    Ok(BuildSummary {
        stats,
        rejections,
        stats_paths: Some(stats_paths),
    })
}

/// Copies the lines that pass the filter policy verbatim.
pub fn filter_corpus(input: &Path, output: &Path, pipeline: &Pipeline, opts: &RunOptions) -> Result<FilterSummary> {
    let cfg = pipeline.config();
    let mut out = create(output)?;
    let mut summary = FilterSummary::default();
    for_each_ordered(
        input,
        opts.workers,
        |line| -> Result<String, Rejection> {
            let text = line.text()?;
            let raw = parse_record(text, line.line_no, &cfg.schema_map).map_err(|e| Rejection {
                line: line.line_no,
                id: None,
                reason: DropReason::SchemaError,
                message: e.to_string(),
            })?;
            match filter_record(&raw, &cfg.filter, cfg.tokenizer) {
                FilterDecision::Keep { .. } => Ok(text.to_string()),
                FilterDecision::Drop(reason) => Err(Rejection {
                    line: line.line_no,
                    id: Some(raw.id),
                    reason,
                    message: reason.as_str().into(),
                }),
            }
        },
        |result| {
            summary.total += 1;
            match result {
                Ok(text) => {
                    summary.kept += 1;
                    out.write_all(text.as_bytes())
                        .and_then(|_| out.write_all(b"\n"))
                        .map_err(|e| Error::io(output, e))
                }
                Err(r) => {
                    log_rejection(&r);
                    *summary.dropped_by_reason.entry(r.reason).or_default() += 1;
                    summary.rejections.push(r);
                    Ok(())
                }
            }
        },
    )?;
    out.flush().map_err(|e| Error::io(output, e))?;
    Ok(summary)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub total: usize,
    pub kept: usize,
    pub dropped_by_reason: BTreeMap<DropReason, usize>,
    #[serde(skip)]
    pub rejections: Vec<Rejection>,
}

impl FilterSummary {
    pub fn record_errors(&self) -> usize {
        self.rejections.iter().filter(|r| r.is_error()).count()
    }
}
