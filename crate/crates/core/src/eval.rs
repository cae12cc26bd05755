//! Scoring of model outputs: average@k accuracy, token and step usage,
//! early-exit behaviour, and reasoning depth across benchmarks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::answer::{answers_equal, normalize_answer_with, AnswerForm, AnswerOptions};
use crate::error::{Error, Result};
use crate::pipeline::JsonlLines;
use crate::sbt::{DEFAULT_GUIDANCE_TEMPLATES, STOP_TOKEN};
use crate::tokenize::{count_tokens, TokenizerMode};
use crate::trajectory::{extract_answer_candidates, split_steps, StepMode, THINK_CLOSE, THINK_OPEN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub guidance_templates: Vec<String>,
    pub special_token: String,
    pub tokenizer: TokenizerMode,
    pub step_mode: StepMode,
    pub answer: AnswerOptions,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            guidance_templates: DEFAULT_GUIDANCE_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            special_token: STOP_TOKEN.to_string(),
            tokenizer: TokenizerMode::default(),
            step_mode: StepMode::default(),
            answer: AnswerOptions::default(),
        }
    }
}

/// The thinking part of an output: between the open tag (or the start)
/// and the first close tag (or the end).
pub fn think_region(output: &str) -> &str {
    let start = output.find(THINK_OPEN).map_or(0, |i| i + THINK_OPEN.len());
    let end = output[start..].find(THINK_CLOSE).map_or(output.len(), |i| start + i);
    &output[start..end]
}

/// Text after the first close tag, empty when there is none.
fn post_think(output: &str) -> &str {
    let start = output.find(THINK_OPEN).map_or(0, |i| i + THINK_OPEN.len());
    match output[start..].find(THINK_CLOSE) {
        Some(i) => &output[start + i + THINK_CLOSE.len()..],
        None => "",
    }
}

/// Lowercase alphanumeric words joined by single spaces, with a space on
/// each side so substring tests respect word boundaries.
fn match_form(text: &str) -> String {
    let mut out = String::from(" ");
    for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        out.push_str(&word.to_lowercase());
        out.push(' ');
    }
    out
}

/// Whether the think segment contains a braking template (ignoring case,
/// punctuation, and spacing) or the special stop token.
pub fn detect_early_exit<S: AsRef<str>>(output_text: &str, templates: &[S], special_token: &str) -> bool {
    let think = think_region(output_text);
    if !special_token.is_empty() && think.contains(special_token) {
        return true;
    }
    let haystack = match_form(think);
    templates
        .iter()
        .map(|t| match_form(t.as_ref()))
        .filter(|t| !t.trim().is_empty())
        .any(|t| haystack.contains(&t))
}

/// One line of a model-output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLine {
    pub id: String,
    pub benchmark: String,
    #[serde(default)]
    pub sample_index: usize,
    pub output_text: String,
    #[serde(default)]
    pub token_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLine {
    pub id: String,
    pub answer: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub benchmark: String,
    pub sample_index: usize,
    pub output_text: String,
    pub ground_truth: AnswerForm,
    pub predicted: Option<AnswerForm>,
    pub correct: bool,
    pub token_count: u64,
    pub step_count: usize,
    pub early_exit: bool,
}

/// Final answer: the last candidate after the think segment, else the
/// last candidate anywhere.
pub fn predicted_answer(output: &str, opts: AnswerOptions) -> Option<AnswerForm> {
    let post = post_think(output);
    let last_in = |text: &str| extract_answer_candidates(text, opts).pop();
    last_in(post).or_else(|| last_in(output))
}

pub fn score_output(line: OutputLine, truth: &AnswerForm, cfg: &EvalConfig) -> EvalRecord {
    let predicted = predicted_answer(&line.output_text, cfg.answer);
    let correct = predicted.as_ref().is_some_and(|p| answers_equal(p, truth));
    let token_count = line
        .token_count
        .unwrap_or_else(|| count_tokens(&line.output_text, cfg.tokenizer) as u64);
    let step_count = split_steps(think_region(&line.output_text), cfg.step_mode).len();
    let early_exit = detect_early_exit(&line.output_text, &cfg.guidance_templates, &cfg.special_token);
    EvalRecord {
        id: line.id,
        benchmark: line.benchmark,
        sample_index: line.sample_index,
        output_text: line.output_text,
        ground_truth: truth.clone(),
        predicted,
        correct,
        token_count,
        step_count,
        early_exit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSplit {
    pub n: usize,
    /// Percentage of correct samples in this group.
    pub accuracy: f64,
    pub avg_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub benchmark: String,
    /// Samples.
    pub n: usize,
    pub questions: usize,
    /// average@k, in percent.
    pub accuracy: f64,
    pub avg_tokens: f64,
    pub avg_steps: f64,
    pub early_exit_fraction: f64,
    pub early_exit: ExitSplit,
    pub no_early_exit: ExitSplit,
}

fn split(records: &[&EvalRecord]) -> ExitSplit {
    let n = records.len();
    if n == 0 {
        return ExitSplit {
            n,
            accuracy: 0.0,
            avg_tokens: 0.0,
        };
    }
    ExitSplit {
        n,
        accuracy: 100.0 * records.iter().filter(|r| r.correct).count() as f64 / n as f64,
        avg_tokens: records.iter().map(|r| r.token_count as f64).sum::<f64>() / n as f64,
    }
}

/// Per-benchmark summaries, sorted by benchmark name. Records are ordered
/// by (benchmark, id, sample) before any summation, so the result does
/// not depend on input order.
pub fn summarize(records: &[EvalRecord]) -> Vec<EvalSummary> {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.benchmark, &a.id, a.sample_index, &a.output_text).cmp(&(
            &b.benchmark,
            &b.id,
            b.sample_index,
            &b.output_text,
        ))
    });
    let mut by_bench: BTreeMap<&str, Vec<&EvalRecord>> = BTreeMap::new();
    for r in sorted {
        by_bench.entry(&r.benchmark).or_default().push(r);
    }
    by_bench
        .into_iter()
        .map(|(bench, recs)| {
            let mut by_question: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
            for r in &recs {
                let e = by_question.entry(&r.id).or_default();
                e.0 += r.correct as usize;
                e.1 += 1;
            }
            let accuracy =
                100.0 * by_question.values().map(|&(c, k)| c as f64 / k as f64).sum::<f64>() / by_question.len() as f64;
            let n = recs.len();
            let (exits, stays): (Vec<&EvalRecord>, Vec<&EvalRecord>) = recs.iter().partition(|r| r.early_exit);
            EvalSummary {
                benchmark: bench.to_string(),
                n,
                questions: by_question.len(),
                accuracy,
                avg_tokens: recs.iter().map(|r| r.token_count as f64).sum::<f64>() / n as f64,
                avg_steps: recs.iter().map(|r| r.step_count as f64).sum::<f64>() / n as f64,
                early_exit_fraction: 100.0 * exits.len() as f64 / n as f64,
                early_exit: split(&exits),
                no_early_exit: split(&stays),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub summaries: Vec<EvalSummary>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in JsonlLines::open(path)? {
        let (line, text) = item.map_err(|e| match e {
            Error::Schema { line, message } => Error::Format { line, message },
            other => other,
        })?;
        out.push(serde_json::from_str(&text).map_err(|e| Error::Format {
            line,
            message: format!("{}: {e}", path.display()),
        })?);
    }
    Ok(out)
}

fn truth_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Joins outputs to truths on `id` and summarizes per benchmark. Every
/// output id must have a truth.
pub fn evaluate_outputs(records_path: &Path, truth_path: &Path, cfg: &EvalConfig) -> Result<EvalReport> {
    let truths: HashMap<String, AnswerForm> = read_jsonl::<TruthLine>(truth_path)?
        .into_iter()
        .map(|t| {
            let form = normalize_answer_with(&truth_string(&t.answer), cfg.answer);
            (t.id, form)
        })
        .collect();
    let lines: Vec<OutputLine> = read_jsonl(records_path)?;
    let unmatched: BTreeSet<&str> = lines
        .iter()
        .filter(|l| !truths.contains_key(&l.id))
        .map(|l| l.id.as_str())
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::Join {
            unmatched: unmatched.into_iter().map(str::to_string).collect(),
        });
    }
    let records: Vec<EvalRecord> = lines
        .into_iter()
        .map(|l| {
            let truth = &truths[&l.id];
            score_output(l, truth, cfg)
        })
        .collect();
    let summaries = summarize(&records);
    Ok(EvalReport { records, summaries })
}

pub fn render_summaries_text(summaries: &[EvalSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>8} {:>10} {:>9} {:>9}  {:>17}  {:>17}",
        "benchmark", "n", "acc", "avg_tok", "avg_step", "exit%", "exit acc/tok", "no-exit acc/tok"
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>8.2} {:>10.1} {:>9.2} {:>9.2}  {:>7.2} / {:>7.1}  {:>7.2} / {:>7.1}",
            s.benchmark,
            s.n,
            s.accuracy,
            s.avg_tokens,
            s.avg_steps,
            s.early_exit_fraction,
            s.early_exit.accuracy,
            s.early_exit.avg_tokens,
            s.no_early_exit.accuracy,
            s.no_early_exit.avg_tokens,
        );
    }
    out
}

pub fn render_summaries_csv(summaries: &[EvalSummary]) -> String {
    let mut out = String::from(
        "benchmark,n,questions,accuracy,avg_tokens,avg_steps,early_exit_fraction,\
         early_exit_n,early_exit_accuracy,early_exit_avg_tokens,\
         no_early_exit_n,no_early_exit_accuracy,no_early_exit_avg_tokens\n",
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&s.benchmark),
            s.n,
            s.questions,
            s.accuracy,
            s.avg_tokens,
            s.avg_steps,
            s.early_exit_fraction,
            s.early_exit.n,
            s.early_exit.accuracy,
            s.early_exit.avg_tokens,
            s.no_early_exit.n,
            s.no_early_exit.accuracy,
            s.no_early_exit.avg_tokens
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub benchmark: String,
    pub avg_steps: f64,
    /// `avg_steps` over the smallest `avg_steps`.
    pub ratio: f64,
}

/// Benchmarks by ascending average step count.
pub fn adaptive_depth_report(summaries: &[EvalSummary]) -> Vec<DepthRow> {
    let mut rows: Vec<(String, f64)> = summaries.iter().map(|s| (s.benchmark.clone(), s.avg_steps)).collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let base = rows.first().map_or(0.0, |r| r.1);
    rows.into_iter()
        .map(|(benchmark, avg_steps)| DepthRow {
            ratio: if base > 0.0 { avg_steps / base } else { 1.0 },
            benchmark,
            avg_steps,
        })
        .collect()
}

pub fn render_depth_text(rows: &[DepthRow]) -> String {
    let mut out = format!("{:<12} {:>10} {:>7}\n", "benchmark", "avg_steps", "ratio");
    for r in rows {
        let _ = writeln!(out, "{:<12} {:>10.2} {:>6.1}\u{d7}", r.benchmark, r.avg_steps, r.ratio);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::answer::normalize_answer;

    fn templates() -> Vec<String> {
        EvalConfig::default().guidance_templates
    }

    #[test]
    fn early_exit_sentence_variants() {
        let t = templates();
        let out = "<think>So 7.\n\nWait, I've verified my answer. No need to continue thinking.</think>\\boxed{7}";
        assert!(detect_early_exit(out, &t, STOP_TOKEN));
        assert!(!detect_early_exit("<think>So 7. Then 8.</think>7", &t, STOP_TOKEN));
        assert!(detect_early_exit(
            "<think>x <stop_overthinking></think>",
            &t,
            STOP_TOKEN
        ));
    }

    #[test]
    fn early_exit_only_inside_think() {
        let t = templates();
        let out = "<think>So 7.</think>I've verified my answer, no need to continue thinking.";
        assert!(!detect_early_exit(out, &t, STOP_TOKEN));
        // missing close tag: the whole tail is still thinking
        assert!(detect_early_exit(
            "<think>I've verified my answer, no need to continue thinking.",
            &t,
            STOP_TOKEN
        ));
    }

    #[test]
    fn template_match_respects_word_edges() {
        let t = ["no need"];
        assert!(detect_early_exit("<think>there is no need</think>", &t, ""));
        assert!(!detect_early_exit("<think>piano needle</think>", &t, ""));
    }

    fn record(
        bench: &str,
        id: &str,
        sample: usize,
        correct: bool,
        tokens: u64,
        steps: usize,
        exit: bool,
    ) -> EvalRecord {
        EvalRecord {
            id: id.into(),
            benchmark: bench.into(),
            sample_index: sample,
            output_text: String::new(),
            ground_truth: normalize_answer("1"),
            predicted: None,
            correct,
            token_count: tokens,
            step_count: steps,
            early_exit: exit,
        }
    }

    #[test]
    fn average_at_k() {
        let recs = vec![
            record("b", "q1", 0, true, 10, 1, true),
            record("b", "q1", 1, false, 20, 2, false),
            record("b", "q2", 0, true, 30, 3, true),
            record("b", "q2", 1, true, 40, 4, false),
        ];
        let s = &summarize(&recs)[0];
        assert_eq!(s.accuracy, 75.0);
        assert_eq!(s.n, 4);
        assert_eq!(s.questions, 2);
        assert_eq!(s.avg_tokens, 25.0);
        assert_eq!(s.early_exit_fraction, 50.0);
        assert_eq!(s.early_exit.n + s.no_early_exit.n, 4);
        assert_eq!(s.early_exit.accuracy, 100.0);
        assert_eq!(s.no_early_exit.accuracy, 50.0);
        assert_eq!(s.early_exit.avg_tokens, 20.0);
    }

    #[test]
    fn summary_ignores_order() {
        let mut recs: Vec<EvalRecord> = (0..30)
            .map(|i| {
                record(
                    ["a", "b"][i % 2],
                    &format!("q{}", i % 7),
                    i,
                    i % 3 == 0,
                    i as u64 * 13,
                    i,
                    i % 5 == 0,
                )
            })
            .collect();
        let before = summarize(&recs);
        recs.reverse();
        recs.swap(3, 17);
        assert_eq!(summarize(&recs), before);
    }

    #[test]
    fn depth_ratios() {
        let mk = |b: &str, steps: f64| EvalSummary {
            benchmark: b.into(),
            n: 1,
            questions: 1,
            accuracy: 0.0,
            avg_tokens: 0.0,
            avg_steps: steps,
            early_exit_fraction: 0.0,
            early_exit: split(&[]),
            no_early_exit: split(&[]),
        };
        let rows = adaptive_depth_report(&[mk("AIME25", 202.23), mk("GSM8K", 27.78)]);
        assert_eq!(rows[0].benchmark, "GSM8K");
        assert_eq!(rows[0].ratio, 1.0);
        assert!(render_depth_text(&rows).contains("7.3\u{d7}"));
        let single = adaptive_depth_report(&[mk("x", 5.0)]);
        assert_eq!(single[0].ratio, 1.0);
        let equal = adaptive_depth_report(&[mk("x", 5.0), mk("y", 5.0)]);
        assert!(equal.iter().all(|r| r.ratio == 1.0));
    }

    #[test]
    fn predicted_prefers_post_think() {
        let p = predicted_answer("<think>the answer is 3</think>So \\boxed{4}.", AnswerOptions::default()).unwrap();
        assert_eq!(p.normalized, "4");
        let p = predicted_answer("no tags, the answer is 5.", AnswerOptions::default()).unwrap();
        assert_eq!(p.normalized, "5");
    }
}
