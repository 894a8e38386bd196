//! Per-run manifest: parameters, seed, file digests and stage timings.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub version: &'static str,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stages: Vec<Stage>,
    pub wall_ms: f64,
    pub failed_rows: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory plus the manifest being assembled for one command.
pub struct Run {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    start: Instant,
}

impl Run {
    pub fn new(command: &str, parameters: serde_json::Value, seed: u64, out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                parameters,
                seed,
                version: env!("CARGO_PKG_VERSION"),
                inputs: Vec::new(),
                outputs: Vec::new(),
                stages: Vec::new(),
                wall_ms: 0.0,
                failed_rows: 0,
            },
            start: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    /// Writes `name` under the output directory and records its digest.
    pub fn output(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(contents) });
        Ok(path)
    }

    pub fn stage<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.manifest.stages.push(Stage { name: name.to_string(), ms: t.elapsed().as_secs_f64() * 1e3 });
        r
    }

    /// Writes `manifest_<command>.json` and returns the failed-row count.
    pub fn finish(mut self) -> Result<usize> {
        self.manifest.wall_ms = self.start.elapsed().as_secs_f64() * 1e3;
        let name = format!("manifest_{}.json", self.manifest.command);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(self.out_dir.join(&name), json)?;
        Ok(self.manifest.failed_rows)
    }
}
