//! Shared inputs for the benchmarks live in `selfbrake::synth`.
