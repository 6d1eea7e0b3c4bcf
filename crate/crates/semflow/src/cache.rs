//! Content-addressed cache of stage artifacts.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::format::write_file;

/// Hex SHA-256 over length-prefixed parts, so part boundaries matter.
pub fn key(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Hits and misses of one stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageStats {
    pub hits: usize,
    pub misses: usize,
}

/// Artifacts live at `<root>/<stage>/<key>.txt`. Without a root nothing is
/// stored and every lookup is a miss.
#[derive(Debug, Default)]
pub struct Cache {
    root: Option<PathBuf>,
    stats: Mutex<BTreeMap<String, StageStats>>,
}

impl Cache {
    pub fn new(root: Option<PathBuf>) -> Self {
        Self { root, stats: Mutex::default() }
    }

    fn record(&self, stage: &str, hit: bool) {
        let mut stats = self.stats.lock().expect("cache stats lock");
        let entry = stats.entry(stage.to_owned()).or_default();
        if hit {
            entry.hits += 1;
        } else {
            entry.misses += 1;
        }
    }

    /// Returns the cached artifact for `(stage, key)` if it decodes, otherwise
    /// computes, stores and returns a fresh one. Unreadable or undecodable
    /// entries count as misses and are overwritten.
    pub fn fetch<T>(
        &self,
        stage: &str,
        key: &str,
        compute: impl FnOnce() -> Result<T>,
        encode: impl FnOnce(&T) -> String,
        decode: impl FnOnce(&str) -> Result<T>,
    ) -> Result<T> {
        let path = self.root.as_ref().map(|r| r.join(stage).join(format!("{key}.txt")));
        if let Some(path) = &path {
            if let Ok(text) = std::fs::read_to_string(path) {
                match decode(&text) {
                    Ok(value) => {
                        self.record(stage, true);
                        return Ok(value);
                    }
                    Err(e) => log::warn!("discarding cached {stage} artifact {}: {e}", path.display()),
                }
            }
        }
        self.record(stage, false);
        let value = compute()?;
        if let Some(path) = &path {
            write_file(path, &encode(&value))?;
        }
        Ok(value)
    }

    pub fn stats(&self) -> BTreeMap<String, StageStats> {
        self.stats.lock().expect("cache stats lock").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_separate_parts() {
        assert_ne!(key(&[b"ab", b"c"]), key(&[b"a", b"bc"]));
        assert_eq!(key(&[b"x"]).len(), 64);
    }

    #[test]
    fn second_fetch_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path().to_owned()));
        let run = |c: &Cache| c.fetch("s", "k", || Ok(41 + 1), |v| v.to_string(), |t| Ok(t.parse::<i32>().unwrap()));
        assert_eq!(run(&cache).unwrap(), 42);
        assert_eq!(run(&cache).unwrap(), 42);
        assert_eq!(cache.stats()["s"], StageStats { hits: 1, misses: 1 });
    }

    #[test]
    fn corrupt_entries_are_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("s")).unwrap();
        std::fs::write(dir.path().join("s/k.txt"), "garbage").unwrap();
        let cache = Cache::new(Some(dir.path().to_owned()));
        let decode = |t: &str| t.parse::<i32>().map_err(|e| crate::Error::Artifact(e.to_string()));
        assert_eq!(cache.fetch("s", "k", || Ok(7), |v| v.to_string(), decode).unwrap(), 7);
        assert_eq!(std::fs::read_to_string(dir.path().join("s/k.txt")).unwrap(), "7");
    }
}
