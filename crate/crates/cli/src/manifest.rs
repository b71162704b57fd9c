//! Append-only provenance log: one JSON line per stage run.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::RuntimeFailure;

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot hash {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn files(paths: &[PathBuf]) -> Result<Value> {
    paths
        .iter()
        .map(|p| Ok(json!({ "path": p, "sha256": sha256_file(p)? })))
        .collect::<Result<Vec<_>>>()
        .map(Value::Array)
}

pub struct Entry<'a> {
    pub stage: &'a str,
    pub seed: u64,
    pub stage_seed: Option<u64>,
    pub params: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Entry<'_> {
    pub fn to_json(&self) -> Result<Value> {
        Ok(json!({
            "stage": self.stage,
            "seed": self.seed,
            "stage_seed": self.stage_seed,
            "params": self.params,
            "inputs": files(&self.inputs)?,
            "outputs": files(&self.outputs)?,
        }))
    }

    /// Appends this entry to `manifest`.
    pub fn append(&self, manifest: &Path) -> Result<()> {
        let line = serde_json::to_string(&self.to_json()?)?;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(manifest)
            .map_err(|e| RuntimeFailure(format!("cannot open {}: {e}", manifest.display())))?;
        writeln!(f, "{line}")
            .map_err(|e| RuntimeFailure(format!("cannot write {}: {e}", manifest.display())))?;
        Ok(())
    }
}

/// `manifest.jsonl` in the directory holding `anchor`.
pub fn default_path(anchor: &Path) -> PathBuf {
    anchor
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("manifest.jsonl"), |d| d.join("manifest.jsonl"))
}
