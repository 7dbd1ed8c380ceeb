use crate::manifest::{DirLock, RunManifest};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use groundparse::analysis::ConcretenessTable;
use groundparse::io::{pos_sidecar_path, read_captions, read_norms, read_scenes};
use groundparse::model::{ModelConfig, OovPolicy};
use groundparse::train::{train, RewardSource, TrainConfig};
use groundparse::types::Corpus;
use serde::Deserialize;
use serde_json::json;
use std::fs;
use std::path::PathBuf;

#[derive(Args)]
pub struct TrainArgs {
    /// Caption file; a `.pos` sidecar is picked up automatically
    #[arg(long)]
    captions: PathBuf,
    /// Scene vectors (TSV), required for the visual-match reward
    #[arg(long)]
    scenes: Option<PathBuf>,
    /// Concreteness norms (TSV), required for the concreteness reward
    #[arg(long)]
    norms: Option<PathBuf>,
    /// JSON config file; flags override it, it overrides defaults
    #[arg(long)]
    config: Option<PathBuf>,

    /// Model shape as `dim,score,combine`, e.g. `1,ws,me` or `512,mlp,l2sum`
    #[arg(long)]
    variant: Option<String>,
    /// Full embedding width
    #[arg(long)]
    d_full: Option<usize>,
    /// Hidden width of the reduction net
    #[arg(long)]
    bottleneck_hidden: Option<usize>,
    /// Hidden width of the MLP scorer
    #[arg(long)]
    score_hidden: Option<usize>,
    /// Right-headedness weight for mean scorers
    #[arg(long)]
    tau: Option<f64>,
    /// How to treat out-of-vocabulary tokens
    #[arg(long, value_enum)]
    oov: Option<OovArg>,

    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Parser learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Matcher learning rate
    #[arg(long)]
    matcher_lr: Option<f64>,
    /// Sampling temperature during training
    #[arg(long)]
    temperature: Option<f64>,
    /// EMA decay of the reward baseline
    #[arg(long)]
    baseline_decay: Option<f64>,
    #[arg(long, value_enum)]
    reward: Option<RewardArg>,
    /// Hinge margin of the matcher loss
    #[arg(long)]
    margin: Option<f64>,
    /// Width of the joint caption-scene space
    #[arg(long)]
    matcher_dim: Option<usize>,

    /// Comma-separated training seeds, one stream each
    #[arg(long, default_value = "0,1,2,3,4")]
    seeds: String,
    /// Output directory: `seed<k>/checkpoint-<e>.json`, `seed<k>/log.jsonl`
    #[arg(long)]
    out_dir: PathBuf,
    /// Disable data parallelism
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OovArg {
    /// Map unknown tokens to a shared row
    Unk,
    /// Reject unknown tokens
    Strict,
}

#[derive(Clone, Copy, ValueEnum)]
enum RewardArg {
    /// Mean concreteness of merged spans, from the norms table
    Concreteness,
    /// Caption-scene match score from a jointly trained matcher
    VisualMatch,
}

/// Optional mirror of every tunable, as accepted in `--config` files.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    variant: Option<String>,
    d_full: Option<usize>,
    bottleneck_hidden: Option<usize>,
    score_hidden: Option<usize>,
    tau: Option<f64>,
    oov: Option<String>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    matcher_lr: Option<f64>,
    temperature: Option<f64>,
    baseline_decay: Option<f64>,
    reward: Option<RewardSource>,
    margin: Option<f64>,
    matcher_dim: Option<usize>,
}

fn parse_oov(s: &str) -> Result<OovPolicy> {
    match s {
        "unk" => Ok(OovPolicy::Unk),
        "strict" => Ok(OovPolicy::Strict),
        other => bail!("unknown oov policy {other:?} (expected unk or strict)"),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = s
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .with_context(|| format!("bad seed {part:?} in {s:?}"))
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    Ok(seeds)
}

/// Resolve model and training settings: defaults, then the config file,
/// then flags. The variant label is resolved first since it sets several
/// model fields at once.
fn resolve(args: &TrainArgs) -> Result<(ModelConfig, TrainConfig)> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let variant = args.variant.as_deref().or(file.variant.as_deref());
    let mut model = match variant {
        Some(v) => ModelConfig::from_variant(v)?,
        None => ModelConfig::default(),
    };
    if let Some(d) = file.d_full {
        model.d_full = d;
    }
    if let Some(h) = file.bottleneck_hidden {
        model.bottleneck_hidden = h;
    }
    if let Some(h) = file.score_hidden {
        model.score_hidden = h;
    }
    if let Some(t) = file.tau {
        model.tau = Some(t);
    }
    if let Some(o) = &file.oov {
        model.oov = parse_oov(o)?;
    }
    if let Some(d) = args.d_full {
        model.d_full = d;
    }
    if let Some(h) = args.bottleneck_hidden {
        model.bottleneck_hidden = h;
    }
    if let Some(h) = args.score_hidden {
        model.score_hidden = h;
    }
    if let Some(t) = args.tau {
        model.tau = Some(t);
    }
    if let Some(o) = args.oov {
        model.oov = match o {
            OovArg::Unk => OovPolicy::Unk,
            OovArg::Strict => OovPolicy::Strict,
        };
    }

    let mut tc = TrainConfig::default();
    if let Some(e) = file.epochs {
        tc.epochs = e;
    }
    if let Some(b) = file.batch_size {
        tc.batch_size = b;
    }
    if let Some(v) = file.lr {
        tc.lr = v;
    }
    if let Some(v) = file.matcher_lr {
        tc.matcher_lr = v;
    }
    if let Some(v) = file.temperature {
        tc.temperature = v;
    }
    if let Some(v) = file.baseline_decay {
        tc.baseline_decay = v;
    }
    if let Some(r) = file.reward {
        tc.reward = r;
    }
    if let Some(v) = file.margin {
        tc.margin = v;
    }
    if let Some(v) = file.matcher_dim {
        tc.matcher_dim = v;
    }
    if let Some(e) = args.epochs {
        tc.epochs = e;
    }
    if let Some(b) = args.batch_size {
        tc.batch_size = b;
    }
    if let Some(v) = args.lr {
        tc.lr = v;
    }
    if let Some(v) = args.matcher_lr {
        tc.matcher_lr = v;
    }
    if let Some(v) = args.temperature {
        tc.temperature = v;
    }
    if let Some(v) = args.baseline_decay {
        tc.baseline_decay = v;
    }
    if let Some(r) = args.reward {
        tc.reward = match r {
            RewardArg::Concreteness => RewardSource::Concreteness,
            RewardArg::VisualMatch => RewardSource::VisualMatch,
        };
    }
    if let Some(v) = args.margin {
        tc.margin = v;
    }
    if let Some(v) = args.matcher_dim {
        tc.matcher_dim = v;
    }

    model.validate()?;
    tc.validate()?;
    Ok((model, tc))
}

pub fn run(args: TrainArgs) -> Result<()> {
    let (model_config, train_config) = resolve(&args)?;
    let seeds = parse_seeds(&args.seeds)?;
    let _lock = DirLock::acquire(&args.out_dir)?;

    let captions = read_captions(&args.captions)
        .with_context(|| format!("reading captions {}", args.captions.display()))?;
    let mut corpus = Corpus::new(captions);
    if let Some(path) = &args.scenes {
        let scenes =
            read_scenes(path).with_context(|| format!("reading scenes {}", path.display()))?;
        corpus = corpus.with_scenes(scenes)?;
    }
    let norms = match &args.norms {
        Some(path) => {
            let table = ConcretenessTable::from_pairs(
                read_norms(path)
                    .with_context(|| format!("reading norms {}", path.display()))?,
            );
            table.validate()?;
            Some(table)
        }
        None => None,
    };

    let outcome = train(
        &corpus,
        &model_config,
        &train_config,
        &seeds,
        norms.as_ref(),
        super::parallelism(args.sequential),
    )?;

    for stream in &outcome.streams {
        let dir = args.out_dir.join(format!("seed{}", stream.seed));
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        for (epoch, checkpoint) in stream.checkpoints.iter().enumerate() {
            checkpoint.save_checkpoint(dir.join(format!("checkpoint-{epoch:03}.json")))?;
        }
        let mut log = String::new();
        for record in &stream.log {
            log.push_str(&serde_json::to_string(record)?);
            log.push('\n');
        }
        fs::write(dir.join("log.jsonl"), log)
            .with_context(|| format!("writing log in {}", dir.display()))?;
        if let Some(matcher) = &stream.matcher {
            let mut text = serde_json::to_string_pretty(matcher)?;
            text.push('\n');
            fs::write(dir.join("matcher.json"), text)
                .with_context(|| format!("writing matcher in {}", dir.display()))?;
        }
    }

    let config = json!({
        "model": model_config,
        "train": train_config,
        "captions": args.captions.display().to_string(),
        "scenes": args.scenes.as_ref().map(|p| p.display().to_string()),
        "norms": args.norms.as_ref().map(|p| p.display().to_string()),
    });
    let mut manifest = RunManifest::new("train", config, seeds);
    manifest.add_input(&args.captions)?;
    manifest.add_input_if_present(&pos_sidecar_path(&args.captions))?;
    if let Some(path) = &args.scenes {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.norms {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.config {
        manifest.add_input(path)?;
    }
    manifest.write(&args.out_dir.join("manifest.json"))
}
