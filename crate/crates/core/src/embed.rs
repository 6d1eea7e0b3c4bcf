//! Word-vector stores and sentence composition by averaging.

use alloc::borrow::Cow;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::{Error, Result};

/// Maps lowercased words to vectors of a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    source: Source,
}

#[derive(Debug, Clone)]
enum Source {
    Table { index: HashMap<String, usize>, data: Vec<f32> },
    Synthetic { seed: u64 },
}

impl EmbeddingStore {
    /// An empty table of dimension `dim`; fill it with [`insert`](Self::insert).
    pub fn table(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(Self { dim, source: Source::Table { index: HashMap::new(), data: Vec::new() } })
    }

    /// A store that covers every word with a unit vector derived from a hash
    /// of the word and `seed`. Two stores with the same arguments are equal.
    pub fn synthetic(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(Self { dim, source: Source::Synthetic { seed } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.source, Source::Synthetic { .. })
    }

    /// Number of stored words; `None` for a synthetic store.
    pub fn len(&self) -> Option<usize> {
        match &self.source {
            Source::Table { index, .. } => Some(index.len()),
            Source::Synthetic { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Adds a word (lowercased). Returns `Ok(false)` and keeps the existing
    /// vector when the word is already present.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        let Source::Table { index, data } = &mut self.source else {
            return Err(Error::InvalidArgument("cannot insert into a synthetic store".into()));
        };
        let key = word.to_lowercase();
        if index.contains_key(&key) {
            return Ok(false);
        }
        index.insert(key, data.len() / self.dim);
        data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn get(&self, word: &str) -> Option<Cow<'_, [f32]>> {
        match &self.source {
            Source::Table { index, data } => {
                let row = *index.get(word)?;
                Some(Cow::Borrowed(&data[row * self.dim..(row + 1) * self.dim]))
            }
            Source::Synthetic { seed } => Some(Cow::Owned(synthetic_vector(word, *seed, self.dim))),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn synthetic_vector(word: &str, seed: u64, dim: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(word.as_bytes()) ^ seed.rotate_left(29));
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = libm::sqrt(raw.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-6 {
            return raw.into_iter().map(|x| (x / norm) as f32).collect();
        }
    }
}

/// The mean embedding of a sentence's in-vocabulary tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub doc_id: String,
    /// Position among the document's surviving sentences.
    pub index: usize,
    /// Index of the originating [`Sentence`].
    pub source_index: usize,
    pub vector: Vec<f64>,
    /// Number of tokens that contributed to the mean (repeats count each time).
    pub omega: usize,
}

/// Averages the vectors of the tokens found in `store`. Returns `None` (the
/// sentence is dropped) when no token is covered.
pub fn compose(tokens: &[String], store: &EmbeddingStore) -> Option<(Vec<f64>, usize)> {
    let mut sum = alloc::vec![0.0f64; store.dim()];
    let mut omega = 0usize;
    for token in tokens {
        if let Some(v) = store.get(token) {
            for (acc, &x) in sum.iter_mut().zip(v.iter()) {
                *acc += f64::from(x);
            }
            omega += 1;
        }
    }
    if omega == 0 {
        return None;
    }
    let denom = omega as f64;
    sum.iter_mut().for_each(|x| *x /= denom);
    Some((sum, omega))
}

/// Embeds one sentence; `index` is copied from the sentence.
pub fn sentence_vector(sentence: &Sentence, store: &EmbeddingStore) -> Option<SentenceVector> {
    compose(&sentence.tokens, store).map(|(vector, omega)| SentenceVector {
        doc_id: sentence.doc_id.clone(),
        index: sentence.index,
        source_index: sentence.index,
        vector,
        omega,
    })
}

/// Embeds every sentence of a document, dropping uncovered ones and
/// re-indexing the survivors `0..S'` in text order.
pub fn embed_document(sentences: &[Sentence], store: &EmbeddingStore) -> Vec<SentenceVector> {
    sentences
        .iter()
        .filter_map(|s| sentence_vector(s, store))
        .enumerate()
        .map(|(i, mut v)| {
            v.index = i;
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn sentence(index: usize, tokens: &[&str]) -> Sentence {
        Sentence { doc_id: "d".into(), index, span: 0..0, tokens: tokens.iter().map(|t| t.to_string()).collect() }
    }

    fn store(rows: &[(&str, &[f32])]) -> EmbeddingStore {
        let mut s = EmbeddingStore::table(rows[0].1.len()).unwrap();
        for (w, v) in rows {
            s.insert(w, v).unwrap();
        }
        s
    }

    #[test]
    fn two_term_average() {
        let st = store(&[("a", &[1.0, 2.0]), ("b", &[3.0, 4.0])]);
        let v = sentence_vector(&sentence(0, &["a", "b"]), &st).unwrap();
        assert_eq!(v.vector, vec![2.0, 3.0]);
        assert_eq!(v.omega, 2);
    }

    #[test]
    fn uncovered_sentence_is_dropped() {
        let st = store(&[("a", &[1.0, 2.0])]);
        assert!(sentence_vector(&sentence(0, &["zzz-unknown"]), &st).is_none());
    }

    #[test]
    fn oov_tokens_are_skipped() {
        let st = store(&[("a", &[4.0, 0.0])]);
        let v = sentence_vector(&sentence(0, &["a", "zzz"]), &st).unwrap();
        assert_eq!((v.vector, v.omega), (vec![4.0, 0.0], 1));
    }

    #[test]
    fn repeated_tokens_count_per_occurrence() {
        let st = store(&[("a", &[3.0]), ("b", &[0.0])]);
        let (v, omega) = compose(&["a".into(), "a".into(), "b".into()], &st).unwrap();
        assert_eq!(omega, 3);
        assert_eq!(v, vec![2.0]);
    }

    #[test]
    fn duplicates_keep_first_and_words_are_lowercased() {
        let mut st = EmbeddingStore::table(1).unwrap();
        assert!(st.insert("Apple", &[1.0]).unwrap());
        assert!(!st.insert("apple", &[2.0]).unwrap());
        assert_eq!(st.get("apple").unwrap().as_ref(), &[1.0]);
        assert_eq!(st.len(), Some(1));
        assert_eq!(st.insert("pear", &[1.0, 2.0]), Err(Error::DimensionMismatch { expected: 1, found: 2 }));
    }

    #[test]
    fn synthetic_is_deterministic_unit_length() {
        let a = EmbeddingStore::synthetic(8, 7).unwrap();
        let b = EmbeddingStore::synthetic(8, 7).unwrap();
        let c = EmbeddingStore::synthetic(8, 8).unwrap();
        for w in ["cat", "dog", "philosophy"] {
            let va = a.get(w).unwrap();
            assert_eq!(va, b.get(w).unwrap());
            assert_ne!(va, c.get(w).unwrap());
            let norm: f32 = va.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-5);
        }
        assert_ne!(a.get("cat"), a.get("dog"));
    }

    #[test]
    fn survivors_are_reindexed_in_order() {
        let st = store(&[("a", &[1.0]), ("b", &[2.0])]);
        let sents = [sentence(0, &["a"]), sentence(1, &["x"]), sentence(2, &["b"])];
        let out = embed_document(&sents, &st);
        assert_eq!(out.len(), 2);
        assert_eq!((out[1].index, out[1].source_index), (1, 2));
        assert_eq!(out[1].vector, vec![2.0]);
    }

    proptest! {
        #[test]
        fn averaging_is_order_free(mut words in proptest::collection::vec("[a-e]", 1..12), seed in 0u64..1000) {
            let st = EmbeddingStore::synthetic(6, seed).unwrap();
            let toks: Vec<String> = words.to_vec();
            let (fwd, _) = compose(&toks, &st).unwrap();
            words.reverse();
            let rev: Vec<String> = words.into_iter().collect();
            let (bwd, _) = compose(&rev, &st).unwrap();
            for (x, y) in fwd.iter().zip(&bwd) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
