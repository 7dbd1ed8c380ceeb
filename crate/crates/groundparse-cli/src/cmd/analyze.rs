use crate::manifest::{sibling_manifest_path, DirLock, RunManifest};
use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use groundparse::analysis::{
    correlate_concreteness, export_embeddings, majority_pos, rank_concreteness,
    replacement_experiment, token_values, ConcretenessTable,
};
use groundparse::io::{pos_sidecar_path, read_captions, read_norms};
use groundparse::model::EmbeddingModel;
use groundparse::treebank::read_treebank;
use groundparse::types::Corpus;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    probe: Probe,
}

#[derive(Subcommand)]
enum Probe {
    /// Rank tokens along the oriented scalar axis and correlate with norms
    Concreteness(ConcretenessArgs),
    /// Re-parse with every noun swapped for the most concrete one
    ReplaceNouns(ReplaceArgs),
    /// Export reduced embeddings as CSV
    ExportEmbeddings(ExportArgs),
}

#[derive(Args)]
struct ConcretenessArgs {
    /// Scalar model checkpoint (repeatable)
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Concreteness norms (TSV) for orientation and correlation
    #[arg(long)]
    norms: Option<PathBuf>,
    /// Tagged captions, used for majority tags when norms are absent
    #[arg(long)]
    captions: Option<PathBuf>,
    /// Report file (JSON); also echoed to stdout
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplaceArgs {
    /// Scalar model checkpoint (repeatable)
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Tagged captions
    #[arg(long)]
    captions: PathBuf,
    /// Gold treebank to score against
    #[arg(long)]
    gold: PathBuf,
    /// Concreteness norms (TSV) for orientation
    #[arg(long)]
    norms: Option<PathBuf>,
    /// Report file (JSON); also echoed to stdout
    #[arg(long)]
    out: PathBuf,
    /// Disable data parallelism
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ExportArgs {
    /// Model checkpoint (repeatable); ids in the CSV are the file stems
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Tagged captions for the pos column
    #[arg(long)]
    captions: Option<PathBuf>,
    /// Concreteness norms (TSV) for orientation
    #[arg(long)]
    norms: Option<PathBuf>,
    /// CSV output file
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    match args.probe {
        Probe::Concreteness(args) => concreteness(args),
        Probe::ReplaceNouns(args) => replace_nouns(args),
        Probe::ExportEmbeddings(args) => export(args),
    }
}

fn load_norms(path: Option<&PathBuf>) -> Result<Option<ConcretenessTable>> {
    match path {
        Some(path) => {
            let table = ConcretenessTable::from_pairs(
                read_norms(path)
                    .with_context(|| format!("reading norms {}", path.display()))?,
            );
            table.validate()?;
            Ok(Some(table))
        }
        None => Ok(None),
    }
}

fn load_pos(path: Option<&PathBuf>) -> Result<Option<BTreeMap<String, String>>> {
    match path {
        Some(path) => {
            let captions = read_captions(path)
                .with_context(|| format!("reading captions {}", path.display()))?;
            Ok(Some(majority_pos(&Corpus::new(captions))?))
        }
        None => Ok(None),
    }
}

#[derive(Serialize)]
struct TokenRank {
    token: String,
    mean_rank: f64,
}

#[derive(Serialize)]
struct ModelConcreteness {
    id: String,
    orientation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlation: Option<CorrelationOut>,
}

#[derive(Serialize)]
struct CorrelationOut {
    r: f64,
    overlap: usize,
}

#[derive(Serialize)]
struct ConcretenessReport {
    ranking: Vec<TokenRank>,
    per_model: Vec<ModelConcreteness>,
    most_concrete: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    most_concrete_noun: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_correlation: Option<f64>,
}

fn concreteness(args: ConcretenessArgs) -> Result<()> {
    let _lock = DirLock::acquire_for_file(&args.out)?;
    let models = super::load_models(&args.models)?;
    let refs: Vec<&EmbeddingModel> = models.iter().collect();
    let norms = load_norms(args.norms.as_ref())?;
    let pos = load_pos(args.captions.as_ref())?;

    let ranking = rank_concreteness(&refs, norms.as_ref(), pos.as_ref())?;

    let mut per_model = Vec::new();
    for (k, model) in refs.iter().enumerate() {
        let correlation = match &norms {
            Some(table) => {
                let values: Vec<f64> = token_values(model)?
                    .iter()
                    .map(|v| v * ranking.orientations[k])
                    .collect();
                let rep = correlate_concreteness(&ranking.tokens, &values, table)?;
                Some(CorrelationOut {
                    r: rep.r,
                    overlap: rep.overlap,
                })
            }
            None => None,
        };
        per_model.push(ModelConcreteness {
            id: super::model_id(&args.models[k]),
            orientation: ranking.orientations[k],
            correlation,
        });
    }
    let mean_correlation = norms.as_ref().map(|_| {
        per_model
            .iter()
            .filter_map(|m| m.correlation.as_ref().map(|c| c.r))
            .sum::<f64>()
            / per_model.len() as f64
    });

    // Rank descending so the most concrete tokens lead the report.
    let mut order: Vec<usize> = (0..ranking.tokens.len()).collect();
    order.sort_by(|&a, &b| {
        ranking.mean_ranks[b]
            .partial_cmp(&ranking.mean_ranks[a])
            .unwrap()
            .then_with(|| ranking.tokens[a].cmp(&ranking.tokens[b]))
    });
    let report = ConcretenessReport {
        ranking: order
            .into_iter()
            .map(|i| TokenRank {
                token: ranking.tokens[i].clone(),
                mean_rank: ranking.mean_ranks[i],
            })
            .collect(),
        per_model,
        most_concrete: ranking.most_concrete().to_string(),
        most_concrete_noun: pos
            .as_ref()
            .and_then(|p| ranking.most_concrete_noun(p).ok())
            .map(str::to_string),
        mean_correlation,
    };
    super::write_report(&args.out, &report)?;

    let config = json!({
        "norms": args.norms.as_ref().map(|p| p.display().to_string()),
        "captions": args.captions.as_ref().map(|p| p.display().to_string()),
    });
    let mut manifest = RunManifest::new("analyze concreteness", config, vec![]);
    for path in &args.models {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.norms {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.captions {
        manifest.add_input(path)?;
        manifest.add_input_if_present(&pos_sidecar_path(path))?;
    }
    manifest.write(&sibling_manifest_path(&args.out))
}

#[derive(Serialize)]
struct ReplaceModelReport {
    id: String,
    before: f64,
    after: f64,
}

#[derive(Serialize)]
struct ReplaceReport {
    replacement: String,
    per_model: Vec<ReplaceModelReport>,
    mean_before: f64,
    mean_after: f64,
}

fn replace_nouns(args: ReplaceArgs) -> Result<()> {
    let _lock = DirLock::acquire_for_file(&args.out)?;
    let models = super::load_models(&args.models)?;
    let refs: Vec<&EmbeddingModel> = models.iter().collect();
    let norms = load_norms(args.norms.as_ref())?;

    let captions = read_captions(&args.captions)
        .with_context(|| format!("reading captions {}", args.captions.display()))?;
    let gold = read_treebank(&args.gold)
        .with_context(|| format!("reading gold {}", args.gold.display()))?;
    let corpus = Corpus::new(captions).with_gold(gold)?;
    let pos = majority_pos(&corpus)?;

    let ranking = rank_concreteness(&refs, norms.as_ref(), Some(&pos))?;
    let result = replacement_experiment(
        &refs,
        &corpus,
        &ranking,
        super::parallelism(args.sequential),
    )?;
    let report = ReplaceReport {
        replacement: result.replacement.clone(),
        per_model: result
            .per_model
            .iter()
            .enumerate()
            .map(|(k, delta)| ReplaceModelReport {
                id: super::model_id(&args.models[k]),
                before: delta.before,
                after: delta.after,
            })
            .collect(),
        mean_before: result.mean_before,
        mean_after: result.mean_after,
    };
    super::write_report(&args.out, &report)?;

    let config = json!({
        "captions": args.captions.display().to_string(),
        "gold": args.gold.display().to_string(),
        "norms": args.norms.as_ref().map(|p| p.display().to_string()),
    });
    let mut manifest = RunManifest::new("analyze replace-nouns", config, vec![]);
    for path in &args.models {
        manifest.add_input(path)?;
    }
    manifest.add_input(&args.captions)?;
    manifest.add_input_if_present(&pos_sidecar_path(&args.captions))?;
    manifest.add_input(&args.gold)?;
    if let Some(path) = &args.norms {
        manifest.add_input(path)?;
    }
    manifest.write(&sibling_manifest_path(&args.out))
}

fn export(args: ExportArgs) -> Result<()> {
    let _lock = DirLock::acquire_for_file(&args.out)?;
    let models = super::load_models(&args.models)?;
    let refs: Vec<&EmbeddingModel> = models.iter().collect();
    let ids: Vec<String> = args.models.iter().map(|p| super::model_id(p)).collect();
    let norms = load_norms(args.norms.as_ref())?;
    let pos = load_pos(args.captions.as_ref())?;

    let csv = export_embeddings(&ids, &refs, pos.as_ref(), norms.as_ref())?;
    fs::write(&args.out, csv).with_context(|| format!("writing {}", args.out.display()))?;

    let config = json!({
        "captions": args.captions.as_ref().map(|p| p.display().to_string()),
        "norms": args.norms.as_ref().map(|p| p.display().to_string()),
    });
    let mut manifest = RunManifest::new("analyze export-embeddings", config, vec![]);
    for path in &args.models {
        manifest.add_input(path)?;
    }
    if let Some(path) = &args.captions {
        manifest.add_input(path)?;
        manifest.add_input_if_present(&pos_sidecar_path(path))?;
    }
    if let Some(path) = &args.norms {
        manifest.add_input(path)?;
    }
    manifest.write(&sibling_manifest_path(&args.out))
}
