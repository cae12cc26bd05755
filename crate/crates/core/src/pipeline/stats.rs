use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::filter::{DropReason, TokenCountSource};
use crate::metrics::OverthinkMetrics;

pub const HISTOGRAM_BINS: usize = 20;
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

const ALL_REASONS: [DropReason; 6] = [
    DropReason::SchemaError,
    DropReason::NoThink,
    DropReason::MultiCloseTag,
    DropReason::ContextLimit,
    DropReason::ParseError,
    DropReason::DuplicateId,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub kept: usize,
    pub dropped_by_reason: BTreeMap<DropReason, usize>,
    pub classified_overthinking: usize,
    /// `classified_overthinking / kept`, 0 when nothing was kept.
    pub classified_fraction: f64,
    /// Score counts in bins `[0, 0.05), [0.05, 0.1), ...`; the last bin includes 1.
    pub score_histogram: Vec<usize>,
    pub score_mean: f64,
    pub eta_s_mean: f64,
    pub eta_t_mean: f64,
    pub kappa_t_mean: f64,
    pub no_early_correct_count: usize,
    pub avg_preserved_steps: f64,
    pub avg_masked_steps: f64,
    pub avg_source_tokens: f64,
    /// SBT-D records whose Foundation alone reaches `tau1`.
    pub foundation_exceeds_tau1: usize,
    /// How the context-length filter counted kept records.
    pub token_count_source: BTreeMap<TokenCountSource, usize>,
}

impl DatasetStats {
    pub fn dropped(&self) -> usize {
        self.dropped_by_reason.values().sum()
    }

    pub fn reconciles(&self) -> bool {
        self.kept + self.dropped() == self.total && self.score_histogram.iter().sum::<usize>() == self.kept
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let pct = |n: usize| {
            if self.kept == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.kept as f64
            }
        };
        let _ = writeln!(out, "records            {:>10}", self.total);
        let _ = writeln!(out, "kept               {:>10}", self.kept);
        for (reason, n) in &self.dropped_by_reason {
            let _ = writeln!(out, "dropped {:<18} {:>3}", reason.as_str(), n);
        }
        let _ = writeln!(
            out,
            "classified         {:>10}  ({:.2}%)",
            self.classified_overthinking,
            100.0 * self.classified_fraction
        );
        let _ = writeln!(out, "no early correct   {:>10}", self.no_early_correct_count);
        let _ = writeln!(out, "foundation >= tau1 {:>10}", self.foundation_exceeds_tau1);
        for (source, n) in &self.token_count_source {
            let name = match source {
                TokenCountSource::Hint => "hint",
                TokenCountSource::Proxy => "proxy",
            };
            let _ = writeln!(out, "token count {:<6} {:>10}", name, n);
        }
        let _ = writeln!(out, "mean score         {:>10.4}", self.score_mean);
        let _ = writeln!(out, "mean eta_s         {:>10.4}", self.eta_s_mean);
        let _ = writeln!(out, "mean eta_t         {:>10.4}", self.eta_t_mean);
        let _ = writeln!(out, "mean kappa_t       {:>10.4}", self.kappa_t_mean);
        let _ = writeln!(out, "avg preserved      {:>10.2}", self.avg_preserved_steps);
        let _ = writeln!(out, "avg masked         {:>10.2}", self.avg_masked_steps);
        let _ = writeln!(out, "avg source tokens  {:>10.1}", self.avg_source_tokens);
        let _ = writeln!(out);
        let _ = writeln!(out, "score histogram");
        for (i, n) in self.score_histogram.iter().enumerate() {
            let lo = i as f64 * HISTOGRAM_BIN_WIDTH;
            let close = if i + 1 == HISTOGRAM_BINS { ']' } else { ')' };
            let _ = writeln!(
                out,
                "  [{:.2}, {:.2}{close} {:>8}  {:>6.2}%",
                lo,
                lo + HISTOGRAM_BIN_WIDTH,
                n,
                pct(*n)
            );
        }
        out
    }
}

pub fn histogram_bin(score: f64) -> usize {
    // the epsilon keeps values such as 0.15 out of the bin below
    let bin = ((score / HISTOGRAM_BIN_WIDTH) + 1e-9).floor();
    (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// What the aggregate needs from each kept record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordSummary {
    pub classified: bool,
    pub metrics: OverthinkMetrics,
    pub preserved_steps: usize,
    pub masked_steps: usize,
    pub source_tokens: usize,
    pub foundation_exceeds_tau1: bool,
    pub token_count_source: TokenCountSource,
}

/// Order-sensitive only through float summation, so feed it in input order.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    total: usize,
    dropped: BTreeMap<DropReason, usize>,
    kept: usize,
    classified: usize,
    histogram: [usize; HISTOGRAM_BINS],
    score_sum: f64,
    eta_s_sum: f64,
    eta_t_sum: f64,
    kappa_sum: f64,
    no_early_correct: usize,
    preserved_sum: usize,
    masked_sum: usize,
    token_sum: usize,
    foundation_exceeds: usize,
    sources: BTreeMap<TokenCountSource, usize>,
}

impl Default for StatsAccumulator {
    fn default() -> Self {
        StatsAccumulator {
            total: 0,
            dropped: ALL_REASONS.iter().map(|&r| (r, 0)).collect(),
            kept: 0,
            classified: 0,
            histogram: [0; HISTOGRAM_BINS],
            score_sum: 0.0,
            eta_s_sum: 0.0,
            eta_t_sum: 0.0,
            kappa_sum: 0.0,
            no_early_correct: 0,
            preserved_sum: 0,
            masked_sum: 0,
            token_sum: 0,
            foundation_exceeds: 0,
            sources: [(TokenCountSource::Hint, 0), (TokenCountSource::Proxy, 0)]
                .into_iter()
                .collect(),
        }
    }
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn drop_record(&mut self, reason: DropReason) {
        self.total += 1;
        *self.dropped.entry(reason).or_default() += 1;
    }

    pub fn keep(&mut self, r: &RecordSummary) {
        self.total += 1;
        self.kept += 1;
        self.classified += r.classified as usize;
        self.histogram[histogram_bin(r.metrics.score)] += 1;
        self.score_sum += r.metrics.score;
        self.eta_s_sum += r.metrics.eta_s;
        self.eta_t_sum += r.metrics.eta_t;
        self.kappa_sum += r.metrics.kappa_t;
        self.no_early_correct += r.metrics.no_early_correct as usize;
        self.preserved_sum += r.preserved_steps;
        self.masked_sum += r.masked_steps;
        self.token_sum += r.source_tokens;
        self.foundation_exceeds += r.foundation_exceeds_tau1 as usize;
        *self.sources.entry(r.token_count_source).or_default() += 1;
    }

    /// Replaces the record totals, e.g. with counts recorded at build time
    /// for records that never reached the dataset.
    pub fn set_dropped(&mut self, dropped: BTreeMap<DropReason, usize>) {
        let before: usize = self.dropped.values().sum();
        let after: usize = dropped.values().sum();
        self.total = self.total - before + after;
        self.dropped = dropped;
    }

    pub fn finish(&self) -> DatasetStats {
        let mean = |sum: f64| if self.kept == 0 { 0.0 } else { sum / self.kept as f64 };
        DatasetStats {
            total: self.total,
            kept: self.kept,
            dropped_by_reason: self.dropped.clone(),
            classified_overthinking: self.classified,
            classified_fraction: mean(self.classified as f64),
            score_histogram: self.histogram.to_vec(),
            score_mean: mean(self.score_sum),
            eta_s_mean: mean(self.eta_s_sum),
            eta_t_mean: mean(self.eta_t_sum),
            kappa_t_mean: mean(self.kappa_sum),
            no_early_correct_count: self.no_early_correct,
            avg_preserved_steps: mean(self.preserved_sum as f64),
            avg_masked_steps: mean(self.masked_sum as f64),
            avg_source_tokens: mean(self.token_sum as f64),
            foundation_exceeds_tau1: self.foundation_exceeds,
            token_count_source: self.sources.clone(),
        }
    }
}
