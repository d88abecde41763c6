//! One command invocation: its output directory, recorded outputs and the
//! manifest written at the end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use sage_core::alignment::write_atomic;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct CacheCounts {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub run_id: String,
    pub seed: u64,
    pub version: &'static str,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<OutputEntry>,
    pub cache: BTreeMap<String, CacheCounts>,
    pub timings_ms: BTreeMap<String, u128>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `<command>-<hash>` over the command, its arguments and the config with
/// output location fields cleared, so identical requests share a run id.
pub fn derive_run_id(command: &str, args: &BTreeMap<String, String>, cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.outdir = PathBuf::new();
    c.run_id = None;
    c.cache_dir = None;
    let material = serde_json::json!({ "command": command, "args": args, "config": c });
    format!("{command}-{}", &sha256_hex(material.to_string().as_bytes())[..12])
}

pub struct Run {
    pub dir: PathBuf,
    pub cfg: RunConfig,
    manifest: Manifest,
    written: Vec<PathBuf>,
    finished: bool,
}

impl Run {
    /// Creates `<outdir>/<run-id>/`. `args` are the command-specific inputs,
    /// recorded in the manifest and mixed into the derived run id.
    pub fn start(command: &str, cfg: RunConfig, args: BTreeMap<String, String>) -> Result<Self> {
        let run_id = cfg.run_id.clone().unwrap_or_else(|| derive_run_id(command, &args, &cfg));
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id.starts_with('.') {
            return Err(CliError::Config(format!("invalid run id `{run_id}`")));
        }
        let dir = cfg.outdir.join(&run_id);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            manifest: Manifest {
                command: command.to_owned(),
                run_id,
                seed: cfg.seed,
                version: env!("CARGO_PKG_VERSION"),
                config: cfg.clone(),
                inputs: args,
                outputs: Vec::new(),
                cache: BTreeMap::new(),
                timings_ms: BTreeMap::new(),
                warnings: Vec::new(),
            },
            cfg,
            written: Vec::new(),
            finished: false,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.manifest.run_id
    }

    /// Write `name` (relative to the run directory) and record its hash.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        write_atomic(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.manifest.outputs.retain(|o| o.path != name);
        self.manifest.outputs.push(OutputEntry {
            path: name.to_owned(),
            sha256: sha256_hex(contents),
            bytes: contents.len(),
        });
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.manifest.warnings.push(msg);
    }

    pub fn cache_counts(&mut self, name: &str, hits: u64, misses: u64) {
        self.manifest.cache.insert(name.to_owned(), CacheCounts { hits, misses });
    }

    /// Time `f` under `stage`.
    pub fn stage<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self);
        *self.manifest.timings_ms.entry(stage.to_owned()).or_default() += t.elapsed().as_millis();
        out
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Write the manifest; outputs are listed in path order.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let mut json = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        json.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        write_atomic(&path, json.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        self.finished = true;
        Ok(self.dir.clone())
    }
}

impl Drop for Run {
    /// A failed command leaves no partial outputs behind.
    fn drop(&mut self) {
        if !self.finished {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Read a text input, as a config error when it is missing.
pub fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
