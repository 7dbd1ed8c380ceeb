mod agree;
mod analyze;
mod eval;
mod parse;
mod synth;
mod train;

use anyhow::{Context, Result};
use clap::Subcommand;
use groundparse::model::EmbeddingModel;
use groundparse::par::Parallelism;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Subcommand)]
pub enum Command {
    /// Parse captions with a saved model
    Parse(parse::ParseArgs),
    /// Train models by policy gradient, one stream per seed
    Train(train::TrainArgs),
    /// Score predicted trees against a gold treebank
    Eval(eval::EvalArgs),
    /// Mean pairwise bracketing agreement between parse files
    Agree(agree::AgreeArgs),
    /// Probe trained embeddings: ranking, noun swaps, CSV export
    Analyze(analyze::AnalyzeArgs),
    /// Generate a synthetic grounded corpus bundle
    Synth(synth::SynthArgs),
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Parse(args) => parse::run(args),
        Command::Train(args) => train::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Agree(args) => agree::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Synth(args) => synth::run(args),
    }
}

fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn load_model(path: &Path) -> Result<EmbeddingModel> {
    EmbeddingModel::load_checkpoint(path)
        .with_context(|| format!("loading model {}", path.display()))
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<EmbeddingModel>> {
    paths.iter().map(|p| load_model(p)).collect()
}

/// Identify a model by its file stem in reports and CSV exports.
fn model_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Write a report as pretty JSON and echo it to stdout.
fn write_report(out: &Path, report: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    print!("{text}");
    Ok(())
}
