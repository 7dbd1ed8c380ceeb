//! Run manifests and output-directory locking.
//!
//! Every subcommand records what it ran with: the crate version, the resolved
//! configuration, the seeds, and a sha256 digest of each input file. Manifests
//! deliberately carry no timestamps so reruns of the same command produce
//! byte-identical artifacts.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

const LOCK_NAME: &str = ".groundparse.lock";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, seeds: Vec<u64>) -> RunManifest {
        RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config,
            seeds,
            inputs: Vec::new(),
        }
    }

    /// Digest an input file into the manifest. Call once per file actually read.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes =
            fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Like `add_input`, but quietly skips files that do not exist
    /// (optional sidecars).
    pub fn add_input_if_present(&mut self, path: &Path) -> Result<()> {
        if path.exists() {
            self.add_input(path)?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Manifest location for a command whose output is a single file: a sibling
/// named `<file>.manifest.json`.
pub fn sibling_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Exclusive claim on an output directory, held for the life of the run.
/// Two invocations writing into the same directory would interleave
/// checkpoints and manifests, so the second one fails fast instead.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => bail!(
                "output directory {} is already in use by another run \
                 (remove {} if that run is gone)",
                dir.display(),
                path.display()
            ),
            Err(e) => {
                Err(e).with_context(|| format!("creating lock file {}", path.display()))
            }
        }
    }

    /// Lock the directory containing `out`, creating it if needed.
    pub fn acquire_for_file(out: &Path) -> Result<DirLock> {
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty());
        DirLock::acquire(dir.unwrap_or(Path::new(".")))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
