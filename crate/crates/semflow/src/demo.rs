//! The bundled fixture corpus behind `pipeline --demo`.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::format::write_file;

/// `(file name, contents)` of every fixture file, manifest included.
pub const FILES: &[(&str, &str)] = &[
    ("manifest.jsonl", include_str!("../data/demo/manifest.jsonl")),
    ("lantern-fox.txt", include_str!("../data/demo/lantern-fox.txt")),
    ("kite-day.txt", include_str!("../data/demo/kite-day.txt")),
    ("snow-garden.txt", include_str!("../data/demo/snow-garden.txt")),
    ("on-habit.txt", include_str!("../data/demo/on-habit.txt")),
    ("dialogue-certainty.txt", include_str!("../data/demo/dialogue-certainty.txt")),
    ("measure-of-things.txt", include_str!("../data/demo/measure-of-things.txt")),
];

/// Writes the fixture corpus into `dir` and returns its manifest path.
pub fn materialize(dir: &Path) -> Result<PathBuf> {
    for (name, contents) in FILES {
        write_file(&dir.join(name), contents)?;
    }
    Ok(dir.join("manifest.jsonl"))
}
