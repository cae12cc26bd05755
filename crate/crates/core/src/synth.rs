//! Deterministic synthetic corpus in the shape of public math reasoning
//! dumps: a `messages` array whose assistant turn holds a think segment.
//!
//! Each trajectory reaches an answer in a Foundation solution and then
//! re-derives it a random number of times, so overthink scores spread
//! across the whole range. Used for tests, benchmarks, and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::sbt::guidance_seed;
use crate::tokenize::{count_tokens, TokenizerMode};
use crate::trajectory::RawTrajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    /// Pad each trajectory with working sentences until it reaches
    /// roughly this many tokens.
    pub target_tokens: Option<usize>,
    /// Share of records whose generation has a second close tag.
    pub multi_close_rate: f64,
    /// Share of records without think tags.
    pub no_think_rate: f64,
    /// Share of records whose token count hint exceeds 16K.
    pub overlong_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 0,
            target_tokens: None,
            multi_close_rate: 0.0,
            no_think_rate: 0.0,
            overlong_rate: 0.0,
        }
    }
}

const CUE_OPENERS: [&str; 10] = [
    "Wait, let me double-check this another way.",
    "Alternatively, I can group the terms differently.",
    "But let me make sure the multiplication is right.",
    "However, I should confirm nothing was missed.",
    "Hold on, is that really correct?",
    "Let me check the arithmetic once more.",
    "Let me verify by substituting back.",
    "Let me try another approach to be safe.",
    "Wait, maybe I misread the problem.",
    "But what if the order of operations matters here?",
];

const HEDGES: [&str; 8] = [
    "Hmm, that still looks consistent.",
    "Maybe I should consider the terms one at a time.",
    "Perhaps it helps to write every product out.",
    "Just to be thorough, I will redo the last part.",
    "Not sure this adds anything, but it costs little.",
    "Going back to the original statement, nothing changes.",
    "Recheck: the numbers in the statement are unchanged.",
    "Let me just double-check the carry.",
];

const WORKING: [&str; 6] = [
    "Writing the quantities down in order keeps the bookkeeping simple.",
    "Each partial result is an integer, so no rounding is involved.",
    "The operations are ordinary integer arithmetic throughout.",
    "Keeping the intermediate value separate avoids mixing terms.",
    "Nothing in the statement suggests a trick or a special case.",
    "The statement fixes all the numbers, so the result is unique.",
];

struct Problem {
    text: String,
    answer: i64,
    /// Sentences working toward the answer.
    derivation: Vec<String>,
}

fn problem(rng: &mut ChaCha8Rng) -> Problem {
    if rng.random_bool(0.5) {
        let (a, b, c) = (
            rng.random_range(2..60i64),
            rng.random_range(2..13i64),
            rng.random_range(2..13i64),
        );
        let bc = b * c;
        Problem {
            text: format!("Compute {a} + {b} \\times {c}."),
            answer: a + bc,
            derivation: vec![
                format!("We need {a} + {b} times {c}, and multiplication comes first."),
                format!("The product {b} times {c} is {bc}, which I keep aside for now."),
                format!("Adding {a} to {bc} then gives {} overall.", a + bc),
            ],
        }
    } else {
        let (a, x, b) = (
            rng.random_range(2..10i64),
            rng.random_range(1..20i64),
            rng.random_range(1..40i64),
        );
        let c = a * x + b;
        Problem {
            text: format!("Solve {a}x + {b} = {c} for x."),
            answer: x,
            derivation: vec![
                format!("We have {a}x + {b} = {c}, a linear equation in x."),
                format!("Subtracting {b} from both sides leaves {a}x equal to {}.", c - b),
                format!("Dividing by {a} gives x equal to {x} as the solution."),
            ],
        }
    }
}

fn conclusion(rng: &mut ChaCha8Rng, value: i64) -> String {
    match rng.random_range(0..3) {
        0 => format!("So the answer is {value}."),
        1 => format!("Therefore the result is \\boxed{{{value}}}."),
        _ => format!("Thus the final answer is {value}."),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

#[derive(Clone, Copy)]
enum Evolution {
    /// One paragraph: cue, recomputation, and answer.
    Quick,
    /// Cue paragraph, a few working paragraphs, then the answer.
    Full,
}

fn evolution_plan(rng: &mut ChaCha8Rng) -> Vec<Evolution> {
    use Evolution::{Full, Quick};
    match rng.random_range(0..100) {
        0..=24 => vec![],
        25..=39 => vec![Quick],
        40..=61 => vec![Full],
        62..=79 => {
            if rng.random_bool(0.5) {
                vec![Full, Quick]
            } else {
                vec![Quick, Quick]
            }
        }
        80..=97 => {
            if rng.random_bool(0.5) {
                vec![Full, Full]
            } else {
                vec![Full, Full, Quick]
            }
        }
        _ => vec![Full; rng.random_range(6..10)],
    }
}

/// The think-segment paragraphs and the final answer shown after it.
fn think_paragraphs(rng: &mut ChaCha8Rng, p: &Problem) -> (Vec<String>, i64) {
    let mut paragraphs = vec!["Let me read the problem carefully before computing anything.".to_string()];
    paragraphs.extend(p.derivation.iter().cloned());
    for _ in 0..rng.random_range(0..=5) {
        let at = rng.random_range(1..paragraphs.len() + 1);
        paragraphs.insert(at, pick(rng, &WORKING).to_string());
    }

    // 0: answer right away; 1: slip in the Foundation, fixed later; 2: never right
    let flavour = match rng.random_range(0..100) {
        0..=84 => 0,
        85..=96 => 1,
        _ => 2,
    };
    let wrong = p.answer + rng.random_range(1..4);
    paragraphs.push(conclusion(rng, if flavour == 0 { p.answer } else { wrong }));

    let mut plan = evolution_plan(rng);
    if flavour == 1 && plan.is_empty() {
        plan.push(Evolution::Full);
    }
    for (k, evo) in plan.into_iter().enumerate() {
        let value = match flavour {
            1 if k == 0 => p.answer,
            2 => wrong,
            _ => p.answer,
        };
        match evo {
            Evolution::Quick => {
                let opener = pick(rng, &CUE_OPENERS);
                paragraphs.push(format!("{opener} {}", conclusion(rng, value)));
            }
            Evolution::Full => {
                paragraphs.push(pick(rng, &CUE_OPENERS).to_string());
                for _ in 0..rng.random_range(0..3) {
                    let hedge = rng.random_bool(0.6);
                    paragraphs.push(pick(rng, if hedge { &HEDGES } else { &WORKING }).to_string());
                }
                paragraphs.push(conclusion(rng, value));
            }
        }
    }
    let final_answer = if flavour == 2 { wrong } else { p.answer };
    (paragraphs, final_answer)
}

/// Appends working sentences round-robin until the text reaches `target`.
fn pad(rng: &mut ChaCha8Rng, paragraphs: &mut [String], target: usize) {
    let mut tokens: usize = paragraphs
        .iter()
        .map(|p| count_tokens(p, TokenizerMode::UnicodeWords))
        .sum();
    // pad only the middle paragraphs so openers and conclusions stay recognizable
    let padded: Vec<usize> = (1..paragraphs.len())
        .filter(|&i| !paragraphs[i].contains("answer is") && !paragraphs[i].contains("result is"))
        .collect();
    if padded.is_empty() {
        return;
    }
    let mut i = 0;
    while tokens < target {
        let extra = pick(rng, &WORKING);
        let idx = padded[i % padded.len()];
        paragraphs[idx].push(' ');
        paragraphs[idx].push_str(extra);
        tokens += count_tokens(extra, TokenizerMode::UnicodeWords);
        i += 1;
    }
}

/// One record as a JSON object with `uuid`, `problem`, `answer`, and
/// `messages`.
pub fn synth_record(opts: &SynthOptions, index: usize) -> Value {
    let id = format!("synth-{index:06}");
    let mut rng = ChaCha8Rng::seed_from_u64(guidance_seed(opts.seed, &id));
    let p = problem(&mut rng);
    let (mut paragraphs, final_answer) = think_paragraphs(&mut rng, &p);
    if let Some(target) = opts.target_tokens {
        pad(&mut rng, &mut paragraphs, target);
    }
    let think = paragraphs.join("\n\n");
    let mut generation = if rng.random_bool(opts.no_think_rate.clamp(0.0, 1.0)) {
        format!("{think}\n\nThe answer is $\\boxed{{{final_answer}}}$.")
    } else {
        format!("<think>\n{think}\n</think>\n\nThe answer is $\\boxed{{{final_answer}}}$.")
    };
    if rng.random_bool(opts.multi_close_rate.clamp(0.0, 1.0)) {
        generation.push_str("\n</think>");
    }
    let mut record = json!({
        "uuid": id,
        "problem": p.text,
        "answer": p.answer.to_string(),
        "messages": [
            {"role": "user", "content": p.text},
            {"role": "assistant", "content": generation},
        ],
    });
    if rng.random_bool(opts.overlong_rate.clamp(0.0, 1.0)) {
        record["token_count"] = json!(20_000);
    }
    record
}

pub fn synth_corpus(opts: &SynthOptions, count: usize) -> impl Iterator<Item = Value> + '_ {
    (0..count).map(move |i| synth_record(opts, i))
}

/// JSONL text of `count` records.
pub fn synth_jsonl(opts: &SynthOptions, count: usize) -> String {
    let mut out = String::new();
    for record in synth_corpus(opts, count) {
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// The same record already mapped to a [`RawTrajectory`].
pub fn synth_trajectory(opts: &SynthOptions, index: usize) -> RawTrajectory {
    let record = synth_record(opts, index);
    let generation = record["messages"][1]["content"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    RawTrajectory {
        id: record["uuid"].as_str().unwrap_or_default().to_string(),
        problem: record["problem"].as_str().unwrap_or_default().to_string(),
        ground_truth: record["answer"].as_str().unwrap_or_default().to_string(),
        generation,
        token_count_hint: record.get("token_count").and_then(Value::as_u64),
    }
}
