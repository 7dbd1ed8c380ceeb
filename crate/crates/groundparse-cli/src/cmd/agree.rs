use crate::manifest::{sibling_manifest_path, DirLock, RunManifest};
use anyhow::{Context, Result};
use clap::Args;
use groundparse::io::read_parses;
use groundparse::metrics::self_f1_cross;
use groundparse::types::SpanTree;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

#[derive(Args)]
pub struct AgreeArgs {
    /// Parse files for the first group
    #[arg(long = "set-a", num_args = 1.., required = true)]
    set_a: Vec<PathBuf>,
    /// Parse files for the second group; defaults to the first, which
    /// measures agreement of a group with itself
    #[arg(long = "set-b", num_args = 1..)]
    set_b: Vec<PathBuf>,
    /// Report file (JSON); also echoed to stdout
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct PairReport {
    a: String,
    b: String,
    f1: f64,
}

#[derive(Serialize)]
struct AgreeReport {
    mean: f64,
    pairs: Vec<PairReport>,
}

fn read_group(paths: &[PathBuf]) -> Result<Vec<Vec<SpanTree>>> {
    paths
        .iter()
        .map(|p| read_parses(p).with_context(|| format!("reading parses {}", p.display())))
        .collect()
}

pub fn run(args: AgreeArgs) -> Result<()> {
    let _lock = DirLock::acquire_for_file(&args.out)?;
    let group_a = read_group(&args.set_a)?;
    let (group_b, ids_b) = if args.set_b.is_empty() {
        (group_a.clone(), &args.set_a)
    } else {
        (read_group(&args.set_b)?, &args.set_b)
    };

    let result = self_f1_cross(&group_a, &group_b)?;
    let pairs = result
        .pairs
        .iter()
        .map(|&(i, j, f1)| PairReport {
            a: super::model_id(&args.set_a[i]),
            b: super::model_id(&ids_b[j]),
            f1,
        })
        .collect();
    let report = AgreeReport {
        mean: result.mean,
        pairs,
    };
    super::write_report(&args.out, &report)?;

    let config = json!({
        "set_a": args.set_a.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "set_b": args.set_b.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let mut manifest = RunManifest::new("agree", config, vec![]);
    for path in args.set_a.iter().chain(&args.set_b) {
        manifest.add_input(path)?;
    }
    manifest.write(&sibling_manifest_path(&args.out))
}
