//! Overthinking detection and adaptive-length dataset construction for long
//! chain-of-thought reasoning traces.

pub mod answer;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod sbt;
pub mod synth;
pub mod tokenize;
pub mod trajectory;

pub use answer::{answers_equal, normalize_answer, normalize_answer_with, AnswerForm, AnswerOptions};
pub use error::{Error, Result};
pub use lexicon::{MarkerLexicon, MarkerMatcher};
pub use metrics::{DetectionLevel, OverthinkMetrics, Scorer, TrajectoryProfile};
pub use pipeline::{DatasetStats, FilterPolicy, Pipeline, PipelineConfig, SchemaMap};
pub use sbt::{AnalyzedTrajectory, SbtConfig, SbtExample, Span, SpanFlag, Strategy};
pub use tokenize::{tokenize, TokenizerMode};
pub use trajectory::{ParseOptions, ParsedTrajectory, RawTrajectory, Step, StepMode, ThinkSegment};
