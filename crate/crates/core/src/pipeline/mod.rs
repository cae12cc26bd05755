//! Corpus-level driver: load, filter, analyze, build, and report.

mod build;
mod config;
mod filter;
mod records;
mod report;
mod stats;
mod sweep;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use build::{
    analyze_corpus, build_dataset, companion_path, filter_corpus, AnalysisRecord, BuildSummary, DatasetRecord,
    FilterSummary, RunOptions, StatsFile,
};
pub use config::{FilterPolicy, PipelineConfig, SchemaMap, DEFAULT_MAX_CONTEXT_TOKENS};
pub use filter::{context_tokens, filter_record, DropReason, FilterDecision, TokenCountSource};
pub use records::{load_records, parse_record, JsonlLines};
pub use report::{stats_report, IntegrityIssue, ReportSource, StatsReport};
pub use stats::{histogram_bin, DatasetStats, RecordSummary, StatsAccumulator, HISTOGRAM_BINS, HISTOGRAM_BIN_WIDTH};
pub use sweep::{threshold_sweep, SweepReport, SweepRow, DEFAULT_THRESHOLDS};

use crate::error::{Error, Result};
use crate::lexicon::MarkerLexicon;
use crate::metrics::Scorer;
use crate::sbt::{build_example, guidance_seed, AnalyzedTrajectory, SbtConfig, SbtExample};
use crate::trajectory::{CueSet, ParseOptions, ParsedTrajectory, RawTrajectory};

/// Lines handed to the worker pool at a time.
const CHUNK_LINES: usize = 1024;

/// A source record that passed filtering and parsing.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub analyzed: AnalyzedTrajectory,
    pub token_count: u64,
    pub token_count_source: TokenCountSource,
}

/// Why a line produced no output record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub id: Option<String>,
    pub reason: DropReason,
    pub message: String,
}

impl Rejection {
    /// Malformed input, as opposed to a policy drop.
    pub fn is_error(&self) -> bool {
        matches!(
            self.reason,
            DropReason::SchemaError | DropReason::ParseError | DropReason::DuplicateId
        )
    }
}

/// Compiled configuration shared by all workers.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    lexicon: MarkerLexicon,
    scorer: Scorer,
    parse: ParseOptions,
}

impl Pipeline {
    /// Loads the lexicon named by the config, or the built-in one.
    pub fn new(config: PipelineConfig) -> Result<Self> {
        let lexicon = match &config.lexicon {
            Some(path) => MarkerLexicon::from_file(path)?,
            None => MarkerLexicon::default(),
        };
        Self::with_lexicon(config, lexicon)
    }

    pub fn with_lexicon(config: PipelineConfig, lexicon: MarkerLexicon) -> Result<Self> {
        config.validate()?;
        let scorer = Scorer::new(&lexicon, config.tokenizer, config.sbt.beta, config.sbt.detection_level)?;
        let parse = ParseOptions {
            step_mode: config.sbt.step_mode,
            tokenizer: config.tokenizer,
            cues: CueSet::new(&config.boundary_cues, config.tokenizer),
            answer: config.answer,
            allow_untagged: !config.filter.require_think_segment,
        };
        Ok(Pipeline {
            config,
            lexicon,
            scorer,
            parse,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &MarkerLexicon {
        &self.lexicon
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn parse_options(&self) -> &ParseOptions {
        &self.parse
    }

    /// Filter, parse, and score one record.
    pub fn prepare(&self, raw: &RawTrajectory) -> Result<Prepared, (DropReason, String)> {
        let (token_count, token_count_source) = match filter_record(raw, &self.config.filter, self.config.tokenizer) {
            FilterDecision::Keep { token_count, source } => (token_count, source),
            FilterDecision::Drop(reason) => return Err((reason, reason.as_str().replace('_', " "))),
        };
        let parsed = ParsedTrajectory::parse(raw, &self.parse).map_err(|e| (DropReason::ParseError, e.to_string()))?;
        let analyzed =
            AnalyzedTrajectory::new(parsed, &self.scorer).map_err(|e| (DropReason::ParseError, e.to_string()))?;
        Ok(Prepared {
            analyzed,
            token_count,
            token_count_source,
        })
    }

    pub fn prepare_line(&self, line_no: usize, line: &str) -> Result<Prepared, Rejection> {
        let raw = parse_record(line, line_no, &self.config.schema_map).map_err(|e| Rejection {
            line: line_no,
            id: None,
            reason: DropReason::SchemaError,
            message: e.to_string(),
        })?;
        self.prepare(&raw).map_err(|(reason, message)| Rejection {
            line: line_no,
            id: Some(raw.id.clone()),
            reason,
            message,
        })
    }

    /// Builds the training example for a prepared record under `sbt`.
    pub fn build_with(&self, prepared: &Prepared, sbt: &SbtConfig) -> Result<SbtExample> {
        let id = &prepared.analyzed.parsed.id;
        let example = build_example(
            &prepared.analyzed,
            &self.scorer,
            sbt,
            guidance_seed(self.config.seed, id),
        )?;
        if !example.source_prefix_check {
            return Err(Error::Structure(format!(
                "record `{id}`: preserved and masked text is not a prefix of the think segment"
            )));
        }
        Ok(example)
    }

    pub fn build(&self, prepared: &Prepared) -> Result<SbtExample> {
        self.build_with(prepared, &self.config.sbt)
    }
}

/// SHA-256 of text, lowercase hex.
pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One input line as seen by a worker.
#[derive(Debug)]
pub(crate) struct InputLine {
    pub line_no: usize,
    pub text: Result<String, String>,
}

impl InputLine {
    /// Undecodable lines become schema rejections.
    pub fn text(&self) -> Result<&str, Rejection> {
        self.text.as_deref().map_err(|message| Rejection {
            line: self.line_no,
            id: None,
            reason: DropReason::SchemaError,
            message: message.clone(),
        })
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Maps every line of `input` on the pool and feeds results to `sink` in
/// input order, so output does not depend on the worker count.
pub(crate) fn for_each_ordered<T, F, S>(input: &Path, workers: usize, work: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(&InputLine) -> T + Sync,
    S: FnMut(T) -> Result<()>,
{
    let pool = thread_pool(workers)?;
    let mut lines = JsonlLines::open(input)?;
    loop {
        let mut chunk = Vec::with_capacity(CHUNK_LINES);
        for item in lines.by_ref() {
            match item {
                Ok((line_no, text)) => chunk.push(InputLine {
                    line_no,
                    text: Ok(text),
                }),
                Err(Error::Schema { line, message }) => chunk.push(InputLine {
                    line_no: line,
                    text: Err(message),
                }),
                Err(e) => return Err(e),
            }
            if chunk.len() == CHUNK_LINES {
                break;
            }
        }
        if chunk.is_empty() {
            return Ok(());
        }
        let results: Vec<T> = pool.install(|| chunk.par_iter().map(&work).collect());
        for r in results {
            sink(r)?;
        }
    }
}
