use crate::manifest::{sibling_manifest_path, DirLock, RunManifest};
use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use groundparse::io::{pos_sidecar_path, read_captions, write_parses};
use groundparse::parser::{parse_corpus, trace_corpus_stochastic, TraceOptions};
use serde_json::json;
use std::path::PathBuf;

#[derive(Args)]
pub struct ParseArgs {
    /// Model checkpoint (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Caption file, one caption per line; a `.pos` sidecar is picked up
    /// automatically when present
    #[arg(long)]
    captions: PathBuf,
    /// Decoding mode
    #[arg(long, value_enum, default_value_t = Mode::Greedy)]
    mode: Mode,
    /// Softmax temperature for sampled decoding
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Sampling seed for sampled decoding
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file, one bracketing per line
    #[arg(long)]
    out: PathBuf,
    /// Emit 1-based token indices instead of surfaces as leaves
    #[arg(long)]
    indices: bool,
    /// Disable data parallelism
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    /// Deterministic argmax merges
    Greedy,
    /// Sample each merge from the score softmax
    Sample,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Greedy => "greedy",
            Mode::Sample => "sample",
        }
    }
}

pub fn run(args: ParseArgs) -> Result<()> {
    let _lock = DirLock::acquire_for_file(&args.out)?;
    let model = super::load_model(&args.model)?;
    let captions = read_captions(&args.captions)
        .with_context(|| format!("reading captions {}", args.captions.display()))?;
    let par = super::parallelism(args.sequential);

    let trees = match args.mode {
        Mode::Greedy => parse_corpus(&model, &captions, par)?,
        Mode::Sample => trace_corpus_stochastic(
            &model,
            &captions,
            args.temperature,
            args.seed,
            par,
            TraceOptions::default(),
        )?
        .iter()
        .map(|trace| trace.tree())
        .collect(),
    };
    write_parses(&args.out, &trees, Some(&captions), !args.indices)?;

    let config = json!({
        "model": args.model.display().to_string(),
        "captions": args.captions.display().to_string(),
        "mode": args.mode.name(),
        "temperature": args.temperature,
        "indices": args.indices,
    });
    let seeds = match args.mode {
        Mode::Greedy => vec![],
        Mode::Sample => vec![args.seed],
    };
    let mut manifest = RunManifest::new("parse", config, seeds);
    manifest.add_input(&args.model)?;
    manifest.add_input(&args.captions)?;
    manifest.add_input_if_present(&pos_sidecar_path(&args.captions))?;
    manifest.write(&sibling_manifest_path(&args.out))
}
