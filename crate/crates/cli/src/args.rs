use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use selfbrake::metrics::DetectionLevel;
use selfbrake::pipeline::PipelineConfig;
use selfbrake::sbt::{GuidanceMode, MaskedExtent, Strategy};
use selfbrake::trajectory::StepMode;
use selfbrake::TokenizerMode;

#[derive(Debug, Parser)]
#[command(
    name = "selfbrake",
    version,
    about = "Overthinking analysis and adaptive-length dataset construction"
)]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for braking-prompt selection.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads [default: logical CPUs].
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Exit with status 1 when any record fails to parse.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Marker lexicon file, one phrase per line.
    #[arg(long, global = true, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop records that fail the context-length or think-tag checks.
    Filter(InOut),
    /// Write per-record overthinking metrics.
    Analyze(InOut),
    /// Build a truncated training dataset.
    Build(InOut),
    /// Classified fraction and lengths across thresholds.
    Sweep(SweepArgs),
    /// Recompute and check statistics of a dataset or metrics dump.
    Stats(StatsArgs),
    /// Score model outputs against reference answers.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct InOut {
    #[arg(short, long, value_name = "JSONL")]
    pub input: PathBuf,
    #[arg(short, long, value_name = "JSONL")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(short, long, value_name = "JSONL")]
    pub input: PathBuf,
    /// Report path stem; `.txt`, `.json` and `.csv` are written.
    #[arg(short, long, value_name = "STEM")]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.4,0.5")]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset or metrics dump.
    #[arg(short, long, value_name = "JSONL")]
    pub input: PathBuf,
    /// Source corpus to re-check prefixes against.
    #[arg(long, value_name = "JSONL")]
    pub source: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model outputs: {id, benchmark, sample_index, output_text, token_count?}.
    #[arg(long, value_name = "JSONL")]
    pub records: PathBuf,
    /// Reference answers: {id, answer}.
    #[arg(long, value_name = "JSONL")]
    pub truth: PathBuf,
    /// Report path stem; `.txt`, `.csv` and `.json` are written.
    #[arg(short, long, value_name = "STEM")]
    pub output: Option<PathBuf>,
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

/// One flag per config field.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long, global = true, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long, global = true)]
    pub tau1: Option<f64>,
    #[arg(long, global = true)]
    pub tau2_delta: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub preserved_solutions: Option<usize>,
    /// few_sentences | one_solution
    #[arg(long, global = true, value_parser = parse_from_str::<MaskedExtent>)]
    pub masked_extent: Option<MaskedExtent>,
    #[arg(long, global = true)]
    pub masked_fraction: Option<f64>,
    /// natural_language | special_token | none
    #[arg(long, global = true, value_parser = parse_from_str::<GuidanceMode>)]
    pub guidance: Option<GuidanceMode>,
    /// Braking sentence (repeatable); replaces the configured list.
    #[arg(long = "guidance-template", global = true, value_name = "TEXT")]
    pub guidance_templates: Vec<String>,
    /// paragraph | sentence
    #[arg(long, global = true, value_parser = parse_from_str::<StepMode>)]
    pub step_mode: Option<StepMode>,
    /// step | token
    #[arg(long, global = true, value_parser = parse_from_str::<DetectionLevel>)]
    pub detection_level: Option<DetectionLevel>,
    /// unicode_words | whitespace
    #[arg(long, global = true, value_parser = parse_from_str::<TokenizerMode>)]
    pub tokenizer: Option<TokenizerMode>,
    #[arg(long, global = true)]
    pub max_context_tokens: Option<u64>,
    #[arg(long, global = true, value_parser = parse_bool, value_name = "BOOL")]
    pub reject_multiple_close_tags: Option<bool>,
    #[arg(long, global = true, value_parser = parse_bool, value_name = "BOOL")]
    pub require_think_segment: Option<bool>,
    #[arg(long, global = true, value_parser = parse_bool, value_name = "BOOL")]
    pub percent_as_fraction: Option<bool>,
    /// Evolution boundary cue (repeatable); replaces the configured list.
    #[arg(long = "boundary-cue", global = true, value_name = "PHRASE")]
    pub boundary_cues: Vec<String>,
    #[arg(long, global = true, value_name = "FIELD")]
    pub field_id: Option<String>,
    #[arg(long, global = true, value_name = "FIELD")]
    pub field_problem: Option<String>,
    #[arg(long, global = true, value_name = "FIELD")]
    pub field_answer: Option<String>,
    #[arg(long, global = true, value_name = "FIELD")]
    pub field_generation: Option<String>,
    #[arg(long, global = true, value_name = "FIELD")]
    pub field_messages: Option<String>,
    #[arg(long, global = true, value_name = "FIELD")]
    pub field_token_count: Option<String>,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s {
        "sbt-e" | "sbt_e" | "exact" => Ok(Strategy::SbtE),
        "sbt-d" | "sbt_d" | "dynamic" => Ok(Strategy::SbtD),
        other => Err(format!("unknown strategy `{other}` (expected sbt-e or sbt-d)")),
    }
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value.clone() {
            $target = v;
        }
    };
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        set!(cfg.sbt.strategy, self.strategy);
        set!(cfg.sbt.tau1, self.tau1);
        set!(cfg.sbt.tau2_delta, self.tau2_delta);
        set!(cfg.sbt.beta, self.beta);
        set!(cfg.sbt.preserved_solutions, self.preserved_solutions);
        set!(cfg.sbt.masked_extent, self.masked_extent);
        set!(cfg.sbt.masked_fraction, self.masked_fraction);
        set!(cfg.sbt.guidance_mode, self.guidance);
        set!(cfg.sbt.step_mode, self.step_mode);
        set!(cfg.sbt.detection_level, self.detection_level);
        set!(cfg.tokenizer, self.tokenizer);
        set!(cfg.filter.max_context_tokens, self.max_context_tokens);
        set!(cfg.filter.reject_multiple_close_tags, self.reject_multiple_close_tags);
        set!(cfg.filter.require_think_segment, self.require_think_segment);
        set!(cfg.answer.percent_as_fraction, self.percent_as_fraction);
        set!(cfg.schema_map.id, self.field_id);
        set!(cfg.schema_map.problem, self.field_problem);
        set!(cfg.schema_map.answer, self.field_answer);
        set!(cfg.schema_map.generation, self.field_generation);
        set!(cfg.schema_map.messages, self.field_messages);
        set!(cfg.schema_map.token_count, self.field_token_count);
        if !self.guidance_templates.is_empty() {
            cfg.sbt.guidance_templates = self.guidance_templates.clone();
        }
        if !self.boundary_cues.is_empty() {
            cfg.boundary_cues = self.boundary_cues.clone();
        }
    }
}
