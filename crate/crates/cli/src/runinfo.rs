//! Run manifest: every command records what it ran, what it read, and what
//! it wrote, so any reported number can be traced to its inputs.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;
use zachvit_core::{Error, Result};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Full resolved configuration after layering defaults, the config
    /// file, and command-line flags.
    pub config: serde_json::Value,
    /// Input files by path, hashed before the run.
    pub inputs_sha256: BTreeMap<String, String>,
    /// Output files relative to the run directory, hashed after the run.
    /// Reruns with identical inputs reproduce these hashes exactly.
    pub outputs_sha256: BTreeMap<String, String>,
    pub duration_seconds: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// All regular files under `dir`, recursively, in sorted order.
pub fn walk_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Tracks one command execution and writes the manifest at the end.
pub struct Run {
    command: String,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Run {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Run {
            command: command.into(),
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Record an input file, hashing it now.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Record an output file; it is hashed when the manifest is written.
    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Hash outputs and atomically write `run_manifest.json` in `dir`.
    pub fn finish(self, dir: &Path) -> Result<()> {
        let mut outputs_sha256 = BTreeMap::new();
        for path in &self.outputs {
            let rel = path.strip_prefix(dir).unwrap_or(path);
            outputs_sha256.insert(rel.display().to_string(), sha256_file(path)?);
        }
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: self.config,
            inputs_sha256: self.inputs,
            outputs_sha256,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        let final_path = dir.join(MANIFEST_NAME);
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&final_path, e))?;
        body.push('\n');
        std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &final_path).map_err(|e| Error::io(&final_path, e))?;
        Ok(())
    }
}
