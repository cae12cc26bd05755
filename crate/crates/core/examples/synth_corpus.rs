//! Writes a synthetic corpus: `synth_corpus <count> [seed] [target_tokens] > corpus.jsonl`

use std::io::{BufWriter, Write};

use selfbrake::synth::{synth_record, SynthOptions};

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| args.get(i).and_then(|s| s.parse::<u64>().ok());
    let count = arg(0).unwrap_or(100) as usize;
    let opts = SynthOptions {
        seed: arg(1).unwrap_or(0),
        target_tokens: arg(2).map(|t| t as usize),
        ..Default::default()
    };
    let mut out = BufWriter::new(std::io::stdout().lock());
    for i in 0..count {
        writeln!(out, "{}", synth_record(&opts, i))?;
    }
    out.flush()
}
