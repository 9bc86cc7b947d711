//! `manifest.json` in the results directory: the latest run of each command.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::common::{write_text, Context};

#[derive(Debug, Serialize, Deserialize)]
pub struct Entry {
    pub args: Vec<String>,
    /// Input path to the SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub config_digest: String,
    pub version: String,
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn record(ctx: &Context, command: &str, seed: u64, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let path = ctx.results.join("manifest.json");
    let mut manifest: BTreeMap<String, Entry> = match fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        Err(_) => BTreeMap::new(),
    };
    let inputs = inputs
        .iter()
        .filter(|p| p.is_file())
        .map(|p| Ok((p.display().to_string(), file_digest(p)?)))
        .collect::<Result<_>>()?;
    manifest.insert(
        command.to_string(),
        Entry {
            args: std::env::args().skip(1).collect(),
            inputs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            config_digest: ctx.config.digest(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    );
    write_text(&path, serde_json::to_string_pretty(&manifest)? + "\n")
}
