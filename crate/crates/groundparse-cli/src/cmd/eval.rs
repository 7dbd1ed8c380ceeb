use crate::manifest::{sibling_manifest_path, DirLock, RunManifest};
use anyhow::{bail, Context, Result};
use clap::Args;
use groundparse::io::{pos_sidecar_path, read_captions, read_parses};
use groundparse::metrics::{category_recall, corpus_f1, F1Average};
use groundparse::parser::parse_corpus;
use groundparse::treebank::read_treebank;
use groundparse::types::SpanTree;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Args)]
pub struct EvalArgs {
    /// Parse file to score (repeatable)
    #[arg(long = "pred")]
    preds: Vec<PathBuf>,
    /// Model checkpoint to parse with and score (repeatable)
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Captions to parse, required with --model
    #[arg(long)]
    captions: Option<PathBuf>,
    /// Gold treebank
    #[arg(long)]
    gold: PathBuf,
    /// Comma-separated labels whose recall to report
    #[arg(long, default_value = "NP,VP,PP,ADJP")]
    categories: String,
    /// Count single tokens and whole sentences too
    #[arg(long)]
    include_trivial: bool,
    /// Report file (JSON); also echoed to stdout
    #[arg(long)]
    out: PathBuf,
    /// Disable data parallelism
    #[arg(long)]
    sequential: bool,
}

#[derive(Serialize)]
struct ModelReport {
    id: String,
    precision: f64,
    recall: f64,
    f1: f64,
    categories: BTreeMap<String, Option<f64>>,
}

#[derive(Serialize)]
struct EvalReport {
    per_model: Vec<ModelReport>,
    mean_f1: f64,
    /// Population standard deviation across models; 0 for a single model.
    std_f1: f64,
    include_trivial: bool,
}

pub fn run(args: EvalArgs) -> Result<()> {
    if args.preds.is_empty() && args.models.is_empty() {
        bail!("nothing to evaluate: pass --pred and/or --model");
    }
    if !args.models.is_empty() && args.captions.is_none() {
        bail!("--model needs --captions to parse");
    }
    let _lock = DirLock::acquire_for_file(&args.out)?;

    let gold = read_treebank(&args.gold)
        .with_context(|| format!("reading gold {}", args.gold.display()))?;
    let labels: Vec<String> = args
        .categories
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();

    let mut sources: Vec<(String, Vec<SpanTree>)> = Vec::new();
    for path in &args.preds {
        let trees =
            read_parses(path).with_context(|| format!("reading parses {}", path.display()))?;
        sources.push((super::model_id(path), trees));
    }
    if !args.models.is_empty() {
        let captions_path = args.captions.as_ref().unwrap();
        let captions = read_captions(captions_path)
            .with_context(|| format!("reading captions {}", captions_path.display()))?;
        let par = super::parallelism(args.sequential);
        for path in &args.models {
            let model = super::load_model(path)?;
            let trees = parse_corpus(&model, &captions, par)
                .with_context(|| format!("parsing with {}", path.display()))?;
            sources.push((super::model_id(path), trees));
        }
    }

    let mut mismatches = Vec::new();
    for (id, trees) in &sources {
        if trees.len() != gold.len() {
            mismatches.push(format!(
                "{id}: {} trees against {} gold trees",
                trees.len(),
                gold.len()
            ));
            continue;
        }
        for (i, (tree, g)) in trees.iter().zip(&gold).enumerate() {
            if tree.n() != g.n {
                mismatches.push(format!(
                    "{id} line {}: {} tokens against {} in gold",
                    i + 1,
                    tree.n(),
                    g.n
                ));
            }
        }
    }
    if !mismatches.is_empty() {
        bail!("predictions do not line up with gold:\n  {}", mismatches.join("\n  "));
    }

    let mut per_model = Vec::new();
    for (id, trees) in &sources {
        let f1 = corpus_f1(trees, &gold, args.include_trivial, F1Average::Micro)?;
        let recalls = category_recall(trees, &gold, args.include_trivial)?;
        let categories = labels
            .iter()
            .map(|label| (label.clone(), recalls.recall(label)))
            .collect();
        per_model.push(ModelReport {
            id: id.clone(),
            precision: f1.precision,
            recall: f1.recall,
            f1: f1.f1,
            categories,
        });
    }
    let mean_f1 = per_model.iter().map(|m| m.f1).sum::<f64>() / per_model.len() as f64;
    let var = per_model
        .iter()
        .map(|m| (m.f1 - mean_f1).powi(2))
        .sum::<f64>()
        / per_model.len() as f64;
    let report = EvalReport {
        per_model,
        mean_f1,
        std_f1: var.sqrt(),
        include_trivial: args.include_trivial,
    };
    super::write_report(&args.out, &report)?;

    let config = json!({
        "gold": args.gold.display().to_string(),
        "categories": labels,
        "include_trivial": args.include_trivial,
    });
    let mut manifest = RunManifest::new("eval", config, vec![]);
    manifest.add_input(&args.gold)?;
    for path in args.preds.iter().chain(&args.models) {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.captions {
        manifest.add_input(path)?;
        manifest.add_input_if_present(&pos_sidecar_path(path))?;
    }
    manifest.write(&sibling_manifest_path(&args.out))
}
