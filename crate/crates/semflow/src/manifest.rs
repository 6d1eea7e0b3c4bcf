//! Line-delimited JSON corpus manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One book of a corpus. `path` is resolved against the manifest's directory
/// when relative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub base: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    /// Parses one JSON object per non-blank line.
    pub fn parse(text: &str, base: PathBuf) -> Result<Self> {
        let mut entries = Vec::new();
        let mut ids = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry =
                serde_json::from_str(line).map_err(|e| Error::Manifest(format!("line {}: {e}", n + 1)))?;
            if !valid_id(&entry.id) {
                return Err(Error::Manifest(format!(
                    "line {}: id `{}` must be non-empty and use only ASCII letters, digits, `.`, `_` and `-`",
                    n + 1,
                    entry.id
                )));
            }
            if !ids.insert(entry.id.clone()) {
                return Err(Error::Manifest(format!("line {}: duplicate id `{}`", n + 1, entry.id)));
            }
            entries.push(entry);
        }
        if entries.is_empty() {
            return Err(Error::Manifest("no entries".into()));
        }
        Ok(Self { base, entries })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base.join(&entry.path)
        }
    }
}

/// Serializes entries back to the manifest format.
pub fn to_json_lines(entries: &[ManifestEntry]) -> String {
    entries.iter().map(|e| serde_json::to_string(e).expect("plain data") + "\n").collect()
}
