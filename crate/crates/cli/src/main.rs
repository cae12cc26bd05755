mod args;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser};
use selfbrake::eval::{
    adaptive_depth_report, evaluate_outputs, render_depth_text, render_summaries_csv, render_summaries_text, EvalConfig,
};
use selfbrake::pipeline::{
    analyze_corpus, build_dataset, filter_corpus, stats_report, threshold_sweep, BuildSummary, Pipeline,
    PipelineConfig, RunOptions,
};

use args::{Cli, Command};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    init_logging(&cli);
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::error!("{e:#}");
            let config_error = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<selfbrake::Error>(), Some(selfbrake::Error::Config(_))));
            ExitCode::from(if config_error { EXIT_USAGE } else { EXIT_FAILURE })
        }
    }
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(lexicon) = &cli.lexicon {
        cfg.lexicon = Some(lexicon.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = resolve_config(cli)?;
    if cli.print_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(0);
    }
    let Some(command) = &cli.command else {
        eprintln!("{}", Cli::command().render_help());
        return Ok(EXIT_USAGE);
    };
    if cli.workers == Some(0) {
        return Err(selfbrake::Error::Config("--workers must be at least 1".into()).into());
    }
    let opts = match cli.workers {
        Some(workers) => RunOptions { workers },
        None => RunOptions::default(),
    };
    let pipeline = Pipeline::new(cfg.clone())?;

    let errors = match command {
        Command::Filter(io) => {
            let s = filter_corpus(&io.input, &io.output, &pipeline, &opts)?;
            let dropped: Vec<String> = s
                .dropped_by_reason
                .iter()
                .map(|(r, n)| format!("{}={n}", r.as_str()))
                .collect();
            log::info!(
                "kept {} of {} records; dropped: {}",
                s.kept,
                s.total,
                if dropped.is_empty() {
                    "none".into()
                } else {
                    dropped.join(", ")
                }
            );
            s.record_errors()
        }
        Command::Analyze(io) => {
            let s = analyze_corpus(&io.input, &io.output, &pipeline, &opts)?;
            report_build("analyzed", &s);
            s.record_errors()
        }
        Command::Build(io) => {
            let s = build_dataset(&io.input, &io.output, &pipeline, &opts)?;
            report_build("built", &s);
            s.record_errors()
        }
        Command::Sweep(args) => {
            let report = threshold_sweep(&args.input, &args.thresholds, &pipeline, &opts)?;
            match &args.output {
                Some(stem) => {
                    let paths = report.write(stem)?;
                    log::info!("wrote {}", paths.map(|p| p.display().to_string()).join(", "));
                }
                None => print_stdout(&report.render_text())?,
            }
            0
        }
        Command::Stats(args) => {
            let source = args.source.as_deref().map(|p| (p, &pipeline));
            let report = stats_report(&args.input, source)?;
            if args.json {
                print_stdout(&(serde_json::to_string_pretty(&report)? + "\n"))?;
            } else {
                print_stdout(&report.render_text())?;
            }
            for issue in &report.issues {
                log::warn!("line {} ({}): {}", issue.line, issue.id, issue.problem);
            }
            if report.matches_build_stats == Some(false) {
                log::warn!("recomputed statistics differ from the build-time stats file");
            }
            report.issues.len() + (report.matches_build_stats == Some(false)) as usize
        }
        Command::Eval(args) => {
            let eval_cfg = EvalConfig {
                guidance_templates: cfg.sbt.guidance_templates.clone(),
                tokenizer: cfg.tokenizer,
                step_mode: cfg.sbt.step_mode,
                answer: cfg.answer,
                ..EvalConfig::default()
            };
            let report = evaluate_outputs(&args.records, &args.truth, &eval_cfg)?;
            let depth = adaptive_depth_report(&report.summaries);
            let text = format!(
                "{}\n{}",
                render_summaries_text(&report.summaries),
                render_depth_text(&depth)
            );
            match &args.output {
                Some(stem) => {
                    write_file(&stem.with_extension("txt"), &text)?;
                    write_file(&stem.with_extension("csv"), &render_summaries_csv(&report.summaries))?;
                    let json = serde_json::json!({"summaries": report.summaries, "depth": depth});
                    write_file(
                        &stem.with_extension("json"),
                        &(serde_json::to_string_pretty(&json)? + "\n"),
                    )?;
                }
                None => print_stdout(&text)?,
            }
            0
        }
    };
    if cli.strict && errors > 0 {
        log::error!("{errors} record-level error(s) in strict mode");
        return Ok(EXIT_FAILURE);
    }
    Ok(0)
}

fn report_build(verb: &str, s: &BuildSummary) {
    let dropped: Vec<String> = s
        .stats
        .dropped_by_reason
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(r, n)| format!("{}={n}", r.as_str()))
        .collect();
    log::info!(
        "{verb} {} of {} records ({} classified); dropped: {}",
        s.stats.kept,
        s.stats.total,
        s.stats.classified_overthinking,
        if dropped.is_empty() {
            "none".into()
        } else {
            dropped.join(", ")
        }
    );
    if let Some((json, text)) = &s.stats_paths {
        log::info!("stats: {}, {}", json.display(), text.display());
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
