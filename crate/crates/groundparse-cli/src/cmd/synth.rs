use crate::manifest::{DirLock, RunManifest};
use anyhow::{Context, Result};
use clap::Args;
use groundparse::io::{write_captions, write_norms, write_scenes};
use groundparse::synth::{generate, SynthConfig};
use groundparse::treebank::write_treebank;
use serde_json::json;
use std::fs;
use std::path::PathBuf;

#[derive(Args)]
pub struct SynthArgs {
    /// Number of captions
    #[arg(long, default_value_t = 1000)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pure-noise dimensions appended to each scene vector
    #[arg(long, default_value_t = 4)]
    noise_dims: usize,
    /// Standard deviation of scene noise
    #[arg(long, default_value_t = 0.01)]
    scene_noise: f64,
    /// Output directory: captions.txt (+ .pos), gold.trees, scenes.tsv,
    /// concreteness.tsv
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let _lock = DirLock::acquire(&args.out_dir)?;
    let config = SynthConfig {
        size: args.size,
        seed: args.seed,
        noise_dims: args.noise_dims,
        scene_noise: args.scene_noise,
    };
    let bundle = generate(&config)?;

    let dir = &args.out_dir;
    write_captions(dir.join("captions.txt"), &bundle.corpus.captions)?;
    let gold = bundle
        .corpus
        .gold
        .as_ref()
        .expect("synthetic corpora always carry gold trees");
    fs::write(dir.join("gold.trees"), write_treebank(gold)?)
        .with_context(|| format!("writing gold trees in {}", dir.display()))?;
    let scenes = bundle
        .corpus
        .scenes
        .as_ref()
        .expect("synthetic corpora always carry scenes");
    write_scenes(dir.join("scenes.tsv"), scenes)?;
    write_norms(dir.join("concreteness.tsv"), &bundle.concreteness)?;

    let manifest = RunManifest::new(
        "synth",
        json!({
            "size": args.size,
            "noise_dims": args.noise_dims,
            "scene_noise": args.scene_noise,
        }),
        vec![args.seed],
    );
    manifest.write(&dir.join("manifest.json"))
}
