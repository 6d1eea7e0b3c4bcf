//! Community sequences and the first-order Markov chain of semantic-field
//! transitions.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::community::Partition;
use crate::embed::SentenceVector;
use crate::{Error, Result};

/// Community label of each surviving sentence, in text order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunitySequence {
    pub doc_id: String,
    pub labels: Vec<usize>,
    /// Number of communities `C`; every label is below it.
    pub states: usize,
}

impl CommunitySequence {
    pub fn new(doc_id: impl Into<String>, labels: Vec<usize>, states: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= states) {
            return Err(Error::InvalidArgument(alloc::format!("label {bad} >= {states} states")));
        }
        Ok(Self { doc_id: doc_id.into(), labels, states })
    }
}

/// Reads each sentence's community from `partition` (sentence `index` is the
/// graph node).
pub fn community_sequence(
    doc_id: &str,
    sentences: &[SentenceVector],
    partition: &Partition,
) -> Result<CommunitySequence> {
    let labels = sentences
        .iter()
        .map(|s| {
            partition
                .label(s.index)
                .ok_or_else(|| Error::PartitionMismatch(alloc::format!("sentence {} has no community", s.index)))
        })
        .collect::<Result<Vec<_>>>()?;
    CommunitySequence::new(doc_id, labels, partition.communities())
}

/// Transition counts and row-normalized probabilities between `states`
/// communities, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    states: usize,
    counts: Vec<u64>,
    probs: Vec<f64>,
}

/// One non-zero entry of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub count: u64,
    pub prob: f64,
}

/// Counts adjacent label pairs (self-transitions included) and normalizes
/// each row by its total.
pub fn build_markov(seq: &CommunitySequence) -> Result<MarkovChain> {
    if seq.labels.len() < 2 {
        return Err(Error::EmptyChain(seq.labels.len()));
    }
    let c = seq.states;
    let mut counts = vec![0u64; c * c];
    for pair in seq.labels.windows(2) {
        counts[pair[0] * c + pair[1]] += 1;
    }
    let mut probs = vec![0.0; c * c];
    for a in 0..c {
        let row = &counts[a * c..(a + 1) * c];
        let total: u64 = row.iter().sum();
        if total > 0 {
            for (p, &n) in probs[a * c..(a + 1) * c].iter_mut().zip(row) {
                *p = n as f64 / total as f64;
            }
        }
    }
    Ok(MarkovChain { states: c, counts, probs })
}

impl MarkovChain {
    /// Rebuilds a chain from explicit entries (e.g. a cached export). Entries
    /// not listed are zero.
    pub fn from_entries(states: usize, entries: impl IntoIterator<Item = Transition>) -> Result<Self> {
        let mut counts = vec![0u64; states * states];
        let mut probs = vec![0.0; states * states];
        for t in entries {
            if t.from >= states || t.to >= states {
                return Err(Error::InvalidArgument(alloc::format!(
                    "transition {}->{} outside {states} states",
                    t.from,
                    t.to
                )));
            }
            if !(0.0..=1.0).contains(&t.prob) {
                return Err(Error::InvalidArgument(alloc::format!("probability {} outside [0, 1]", t.prob)));
            }
            counts[t.from * states + t.to] = t.count;
            probs[t.from * states + t.to] = t.prob;
        }
        Ok(Self { states, counts, probs })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.states + to]
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.states + to]
    }

    /// Sum of all transition counts.
    pub fn total_transitions(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Entries with a non-zero probability or count, in row-major order.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        let c = self.states;
        (0..c * c).filter(|&i| self.counts[i] > 0 || self.probs[i] > 0.0).map(move |i| Transition {
            from: i / c,
            to: i % c,
            count: self.counts[i],
            prob: self.probs[i],
        })
    }

    /// Number of non-zero entries, self-loops included.
    pub fn edge_count(&self) -> usize {
        self.transitions().count()
    }

    /// Zeroes every entry with probability strictly below `threshold`. The
    /// surviving probabilities are left as they are (rows are not
    /// renormalized).
    pub fn prune(&self, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidThreshold(threshold));
        }
        let mut out = self.clone();
        for (p, n) in out.probs.iter_mut().zip(out.counts.iter_mut()) {
            if *p < threshold {
                *p = 0.0;
                *n = 0;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;

    fn chain(labels: &[usize], states: usize) -> MarkovChain {
        build_markov(&CommunitySequence::new("d", labels.to_vec(), states).unwrap()).unwrap()
    }

    fn sv(index: usize) -> SentenceVector {
        SentenceVector { doc_id: "d".into(), index, source_index: index, vector: vec![1.0], omega: 1 }
    }

    #[test]
    fn sequence_from_partition() {
        let p = Partition::from_labels(&[A, B, C, B]);
        let seq = community_sequence("d", &[sv(0), sv(1), sv(2), sv(3)], &p).unwrap();
        assert_eq!(seq.labels, vec![A, B, C, B]);
        let one = community_sequence("d", &[sv(0), sv(1)], &Partition::whole(2)).unwrap();
        assert_eq!(one.labels, vec![0, 0]);
        assert!(matches!(community_sequence("d", &[sv(0), sv(5)], &p), Err(Error::PartitionMismatch(_))));
        let empty = community_sequence("d", &[], &Partition::whole(0)).unwrap();
        assert_eq!(build_markov(&empty), Err(Error::EmptyChain(0)));
    }

    #[test]
    fn abcb_sequence() {
        let m = chain(&[A, B, C, B], 3);
        assert_eq!(m.prob(A, B), 1.0);
        assert_eq!(m.prob(B, C), 1.0);
        assert_eq!(m.prob(C, B), 1.0);
        assert_eq!(m.edge_count(), 3);
        assert_eq!(m.total_transitions(), 3);
    }

    #[test]
    fn self_transitions_are_kept() {
        let m = chain(&[A, A, B], 2);
        assert_eq!((m.prob(A, A), m.prob(A, B)), (0.5, 0.5));
        assert_eq!(m.prob(B, A) + m.prob(B, B), 0.0);
    }

    #[test]
    fn alternation() {
        let m = chain(&[A, B, A, B, A], 2);
        assert_eq!((m.prob(A, B), m.prob(B, A)), (1.0, 1.0));
        assert_eq!((m.count(A, B), m.count(B, A)), (2, 2));
    }

    #[test]
    fn single_label_is_empty_chain() {
        let seq = CommunitySequence::new("d", vec![A], 1).unwrap();
        assert_eq!(build_markov(&seq), Err(Error::EmptyChain(1)));
    }

    #[test]
    fn prune_examples() {
        // Row A: 6 to A, 3 to B, 1 to C.
        let labels: Vec<usize> = [A; 7].into_iter().chain([B, A, B, A, B, A, C]).collect();
        let m = chain(&labels, 3);
        assert_eq!((m.prob(A, A), m.prob(A, B), m.prob(A, C)), (0.6, 0.3, 0.1));
        let p = m.prune(0.2).unwrap();
        assert_eq!((p.prob(A, A), p.prob(A, B), p.prob(A, C)), (0.6, 0.3, 0.0));
        assert_eq!(p.count(A, C), 0);
        assert_eq!(m.prune(0.0).unwrap(), m);

        let f3 = chain(&[A, B, C, B], 3);
        assert_eq!(f3.prune(1.0).unwrap(), f3);
        assert_eq!(m.prune(1.5), Err(Error::InvalidThreshold(1.5)));
        assert!(m.prune(-0.1).is_err());
    }

    fn sequence() -> impl Strategy<Value = (Vec<usize>, usize)> {
        (1usize..7).prop_flat_map(|c| (proptest::collection::vec(0..c, 2..60), Just(c)))
    }

    proptest! {
        #[test]
        fn counts_match_pair_loop((labels, c) in sequence()) {
            let m = chain(&labels, c);
            let mut oracle = vec![vec![0u64; c]; c];
            for t in 0..labels.len() - 1 {
                oracle[labels[t]][labels[t + 1]] += 1;
            }
            for (a, expected) in oracle.iter().enumerate() {
                for (b, &n) in expected.iter().enumerate() {
                    prop_assert_eq!(m.count(a, b), n);
                }
                let row: f64 = (0..c).map(|b| m.prob(a, b)).sum();
                if expected.iter().sum::<u64>() > 0 {
                    prop_assert!((row - 1.0).abs() < 1e-9);
                } else {
                    prop_assert_eq!(row, 0.0);
                }
            }
            prop_assert_eq!(m.total_transitions(), labels.len() as u64 - 1);
        }

        #[test]
        fn prune_is_monotone_and_composes((labels, c) in sequence(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let m = chain(&labels, c);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(m.prune(hi).unwrap().edge_count() <= m.prune(lo).unwrap().edge_count());
            prop_assert_eq!(m.prune(t1).unwrap().prune(t2).unwrap(), m.prune(hi).unwrap());
        }
    }
}
