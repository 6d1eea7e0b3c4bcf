//! Reading books, stopword lists and word-vector files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use semflow_core::corpus::StopWords;
use semflow_core::embed::EmbeddingStore;

use crate::error::{Error, Result};

/// Reads a text file, replacing invalid UTF-8 and dropping a leading BOM.
pub fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(text.strip_prefix('\u{feff}').unwrap_or(&text).to_owned())
}

/// One word per line; blank lines and `#` comments are skipped.
pub fn load_stopwords(path: &Path) -> Result<StopWords> {
    Ok(StopWords::parse(&read_text(path)?))
}

/// Parses the word2vec text format: a `<vocab> <dim>` header, then one
/// `<word> <v1> ... <vdim>` row per line. When `keep` is given only the
/// listed (lowercased) words are stored, but every row is still validated.
pub fn parse_word2vec<R: BufRead>(reader: R, keep: Option<&HashSet<String>>) -> semflow_core::Result<EmbeddingStore> {
    use semflow_core::Error as E;
    let mut lines = reader.lines().enumerate();
    let read_err = |line: usize, e: std::io::Error| E::Parse { line, message: e.to_string() };
    let (dim, mut store) = loop {
        let Some((n, line)) = lines.next() else {
            return Err(E::Parse { line: 1, message: "missing header".into() });
        };
        let line = line.map_err(|e| read_err(n + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[_, dim]) if dim > 0 => break (dim, EmbeddingStore::table(dim)?),
            _ => {
                return Err(E::Parse { line: n + 1, message: format!("expected `<vocab> <dim>` header, got `{line}`") })
            }
        }
    };
    let mut rows = 0usize;
    let mut vector = Vec::with_capacity(dim);
    for (n, line) in lines {
        let line = line.map_err(|e| read_err(n + 1, e))?;
        let mut fields = line.split_ascii_whitespace();
        let Some(word) = fields.next() else { continue };
        vector.clear();
        for field in fields {
            let x: f32 =
                field.parse().map_err(|_| E::Parse { line: n + 1, message: format!("`{field}` is not a number") })?;
            vector.push(x);
        }
        if vector.len() != dim {
            return Err(E::DimensionMismatch { expected: dim, found: vector.len() });
        }
        rows += 1;
        if keep.is_none_or(|k| k.contains(&word.to_lowercase())) {
            store.insert(word, &vector)?;
        }
    }
    if rows == 0 {
        return Err(E::Parse { line: 2, message: "no vectors after the header".into() });
    }
    Ok(store)
}

pub fn load_word2vec(path: &Path, keep: Option<&HashSet<String>>) -> Result<EmbeddingStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_word2vec(BufReader::with_capacity(1 << 20, file), keep)
        .map_err(|source| Error::InFile { path: path.to_owned(), source })
}

/// Where word vectors come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    Word2VecText(PathBuf),
    Synthetic { dim: usize, seed: u64 },
}

impl EmbeddingSource {
    /// Identifies the store for cache keys: path, size and modification time
    /// for files, parameters for synthetic stores.
    pub fn fingerprint(&self) -> Result<String> {
        match self {
            EmbeddingSource::Word2VecText(path) => {
                let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
                let mtime = meta
                    .modified()
                    .ok()
                    .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
                    .map_or(0, |d| d.as_nanos());
                Ok(format!("word2vec-text:{}:{}:{mtime}", path.display(), meta.len()))
            }
            EmbeddingSource::Synthetic { dim, seed } => Ok(format!("synthetic:{dim}:{seed}")),
        }
    }

    pub fn load(&self, keep: Option<&HashSet<String>>) -> Result<EmbeddingStore> {
        match self {
            EmbeddingSource::Word2VecText(path) => load_word2vec(path, keep),
            EmbeddingSource::Synthetic { dim, seed } => Ok(EmbeddingStore::synthetic(*dim, *seed)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use semflow_core::Error as E;

    #[test]
    fn header_and_rows() {
        let store = parse_word2vec("2 3\napple 1 0 0\npear 0 1 0\n".as_bytes(), None).unwrap();
        assert_eq!((store.dim(), store.len()), (3, Some(2)));
        assert_eq!(store.get("pear").unwrap().as_ref(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn short_row_is_a_dimension_mismatch() {
        let err = parse_word2vec("2 3\napple 1 0 0\npear 0 1\n".as_bytes(), None).unwrap_err();
        assert_eq!(err, E::DimensionMismatch { expected: 3, found: 2 });
    }

    #[test]
    fn bad_number_reports_its_line() {
        let err = parse_word2vec("2 2\napple 1 0\npear 0 x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, E::Parse { line: 3, .. }), "{err:?}");
        let err = parse_word2vec("apple 1 0\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, E::Parse { line: 1, .. }));
        assert!(parse_word2vec("1 2\n".as_bytes(), None).is_err());
    }

    #[test]
    fn duplicates_keep_first_and_words_are_lowercased() {
        let store = parse_word2vec("3 1\nApple 1\napple 2\nPEAR 3 \n".as_bytes(), None).unwrap();
        assert_eq!(store.get("apple").unwrap().as_ref(), &[1.0]);
        assert_eq!(store.get("pear").unwrap().as_ref(), &[3.0]);
    }

    #[test]
    fn vocabulary_filter() {
        let keep: HashSet<String> = ["pear".to_owned()].into();
        let store = parse_word2vec("2 1\napple 1\npear 2\n".as_bytes(), Some(&keep)).unwrap();
        assert_eq!(store.len(), Some(1));
        assert!(store.get("apple").is_none());
    }

    #[test]
    fn synthetic_source_is_deterministic() {
        let src = EmbeddingSource::Synthetic { dim: 8, seed: 7 };
        let (a, b) = (src.load(None).unwrap(), src.load(None).unwrap());
        for w in ["cat", "dog", "semantic"] {
            assert_eq!(a.get(w), b.get(w));
        }
        assert_eq!(src.fingerprint().unwrap(), "synthetic:8:7");
    }
}
