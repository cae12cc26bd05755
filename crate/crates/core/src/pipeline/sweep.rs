use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::build::RunOptions;
use super::{for_each_ordered, Pipeline};
use crate::error::{Error, Result};
use crate::sbt::Strategy;

/// Thresholds swept by default.
pub const DEFAULT_THRESHOLDS: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub classified: usize,
    /// Classified share of kept records in `[0, 1]`.
    pub fraction: f64,
    pub avg_preserved_steps: f64,
    pub avg_masked_steps: f64,
    /// Mean preserved plus masked source tokens; braking prompts excluded.
    pub avg_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub strategy: Strategy,
    pub total: usize,
    pub kept: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "strategy {}  records {}  kept {}",
            self.strategy.as_str(),
            self.total,
            self.kept
        );
        let _ = writeln!(
            out,
            "{:>6}  {:>10}  {:>9}  {:>14}  {:>11}  {:>10}",
            "tau1", "classified", "overthink", "avg_preserved", "avg_masked", "avg_tokens"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>6.2}  {:>10}  {:>8.2}%  {:>14.2}  {:>11.2}  {:>10.1}",
                r.threshold,
                r.classified,
                100.0 * r.fraction,
                r.avg_preserved_steps,
                r.avg_masked_steps,
                r.avg_tokens
            );
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("threshold,fraction,avg_preserved_steps,avg_masked_steps,avg_tokens\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.threshold, r.fraction, r.avg_preserved_steps, r.avg_masked_steps, r.avg_tokens
            );
        }
        out
    }

    /// Writes `<stem>.txt`, `<stem>.json`, and `<stem>.csv`.
    pub fn write(&self, stem: &Path) -> Result<[PathBuf; 3]> {
        if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let paths = [
            stem.with_extension("txt"),
            stem.with_extension("json"),
            stem.with_extension("csv"),
        ];
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        for (path, body) in paths.iter().zip([self.render_text(), json, self.render_csv()]) {
            std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
        Ok(paths)
    }
}

/// Rebuilds every kept record once per threshold (all other settings from
/// the pipeline config) and aggregates the outcome. Records are parsed and
/// scored once.
pub fn threshold_sweep(
    input: &Path,
    thresholds: &[f64],
    pipeline: &Pipeline,
    opts: &RunOptions,
) -> Result<SweepReport> {
    if thresholds.is_empty() {
        return Err(Error::Config("thresholds must not be empty".into()));
    }
    let configs = thresholds
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("threshold {t} must lie in (0, 1)")));
            }
            let mut cfg = pipeline.config().sbt.clone();
            cfg.tau1 = t;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    #[derive(Default, Clone, Copy)]
    struct Sums {
        classified: usize,
        preserved: usize,
        masked: usize,
        tokens: usize,
    }
    let mut sums = vec![Sums::default(); configs.len()];
    let mut total = 0;
    let mut kept = 0;
    let mut seen = HashSet::new();

    for_each_ordered(
        input,
        opts.workers,
        |line| {
            let text = line.text().ok()?;
            let prepared = pipeline.prepare_line(line.line_no, text).ok()?;
            let per_threshold = configs
                .iter()
                .map(|cfg| pipeline.build_with(&prepared, cfg))
                .collect::<Result<Vec<_>>>()
                .ok()?;
            Some((prepared.analyzed.parsed.id.clone(), per_threshold))
        },
        |result| {
            total += 1;
            if let Some((id, examples)) = result {
                if seen.insert(id) {
                    kept += 1;
                    for (s, ex) in sums.iter_mut().zip(&examples) {
                        s.classified += ex.classified_overthinking as usize;
                        s.preserved += ex.preserved_steps;
                        s.masked += ex.masked_steps;
                        s.tokens += ex.source_tokens;
                    }
                }
            }
            Ok(())
        },
    )?;

    let mean = |x: usize| if kept == 0 { 0.0 } else { x as f64 / kept as f64 };
    let rows = thresholds
        .iter()
        .zip(&sums)
        .map(|(&threshold, s)| SweepRow {
            threshold,
            classified: s.classified,
            fraction: mean(s.classified),
            avg_preserved_steps: mean(s.preserved),
            avg_masked_steps: mean(s.masked),
            avg_tokens: mean(s.tokens),
        })
        .collect();
    Ok(SweepReport {
        strategy: pipeline.config().sbt.strategy,
        total,
        kept,
        rows,
    })
}
