use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::alignment::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Response cache keyed by request hash, optionally backed by a JSON-lines
/// file. New entries stay in memory until [`ResponseCache::flush`], which
/// rewrites the whole file atomically in key order.
#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, CacheEntry>>,
    dirty: Mutex<bool>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load `path` if it exists; it is created on the first flush.
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let err = |message: String| LlmError::Cache {
            path: path.display().to_string(),
            message,
        };
        let mut entries = BTreeMap::new();
        match fs::read_to_string(path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let e: CacheEntry = serde_json::from_str(line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
                    entries.insert(e.key.clone(), e);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(err(e.to_string())),
        }
        Ok(Self {
            path: Some(path.to_owned()),
            entries: Mutex::new(entries),
            ..Self::default()
        })
    }

    /// Lookup that counts toward the hit/miss statistics.
    pub fn get(&self, key: &str) -> Option<String> {
        let found = self.entries.lock().unwrap().get(key).map(|e| e.response.clone());
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// First write wins; an existing key is never overwritten.
    pub fn insert(&self, key: &str, response: &str) {
        let mut entries = self.entries.lock().unwrap();
        if !entries.contains_key(key) {
            let timestamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            entries.insert(
                key.to_owned(),
                CacheEntry {
                    key: key.to_owned(),
                    response: response.to_owned(),
                    timestamp,
                },
            );
            *self.dirty.lock().unwrap() = true;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Write the file if anything changed since load.
    pub fn flush(&self) -> Result<(), LlmError> {
        let Some(path) = &self.path else { return Ok(()) };
        let mut dirty = self.dirty.lock().unwrap();
        if !*dirty {
            return Ok(());
        }
        let mut out = String::new();
        for e in self.entries.lock().unwrap().values() {
            out.push_str(&serde_json::to_string(e).expect("cache entry serializes"));
            out.push('\n');
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| self.io_err(e))?;
        }
        write_atomic(path, out.as_bytes()).map_err(|e| self.io_err(e))?;
        *dirty = false;
        Ok(())
    }

    fn io_err(&self, e: io::Error) -> LlmError {
        LlmError::Cache {
            path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            message: e.to_string(),
        }
    }
}
