//! Two- and three-node directed motif census of a Markov chain.
//!
//! The catalog holds the 15 weakly connected, loop-free digraphs on two or
//! three nodes: the single arc and the reciprocal pair, then the 13 connected
//! triads ordered by arc count and canonical arc set. A class's canonical form
//! is its lexicographically smallest sorted arc list over all node
//! permutations.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::semflow::MarkovChain;
use crate::{Error, Result};

/// Number of motif classes (feature length).
pub const MOTIF_CLASSES: usize = 15;

/// Arcs of a 3-node digraph in lexicographic order; bit `k` of a mask is
/// `TRIAD_ARCS[k]`.
const TRIAD_ARCS: [(u8, u8); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

const PERMUTATIONS: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

const fn arc_bit(from: u8, to: u8) -> u8 {
    let mut k = 0;
    while k < 6 {
        if TRIAD_ARCS[k].0 == from && TRIAD_ARCS[k].1 == to {
            return k as u8;
        }
        k += 1;
    }
    panic!("not an arc")
}

const fn permute(mask: u8, perm: [u8; 3]) -> u8 {
    let mut out = 0u8;
    let mut k = 0;
    while k < 6 {
        if mask & (1 << k) != 0 {
            let (a, b) = TRIAD_ARCS[k];
            out |= 1 << arc_bit(perm[a as usize], perm[b as usize]);
        }
        k += 1;
    }
    out
}

/// Lexicographic order of equal-size sorted arc lists: the list holding the
/// smallest arc of the symmetric difference is smaller.
const fn lex_less(a: u8, b: u8) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) != 0
}

const fn canonical_triad(mask: u8) -> u8 {
    let mut best = mask;
    let mut p = 0;
    while p < 6 {
        let m = permute(mask, PERMUTATIONS[p]);
        if lex_less(m, best) {
            best = m;
        }
        p += 1;
    }
    best
}

const fn weakly_connected_triad(mask: u8) -> bool {
    let ab = mask & ((1 << 0) | (1 << 2)) != 0;
    let ac = mask & ((1 << 1) | (1 << 4)) != 0;
    let bc = mask & ((1 << 3) | (1 << 5)) != 0;
    (ab as u8 + ac as u8 + bc as u8) >= 2
}

/// Canonical masks of the 13 connected triads in catalog order.
const TRIAD_CANONICALS: [u8; 13] = {
    let mut found = [0u8; 13];
    let mut count = 0;
    let mut mask = 0u8;
    while mask < 64 {
        if weakly_connected_triad(mask) && canonical_triad(mask) == mask {
            found[count] = mask;
            count += 1;
        }
        mask += 1;
    }
    assert!(count == 13);
    // Insertion sort by (arc count, lexicographic arc list).
    let mut i = 1;
    while i < 13 {
        let mut j = i;
        while j > 0 {
            let (x, y) = (found[j - 1], found[j]);
            let before = y.count_ones() < x.count_ones() || (y.count_ones() == x.count_ones() && lex_less(y, x));
            if !before {
                break;
            }
            found[j - 1] = y;
            found[j] = x;
            j -= 1;
        }
        i += 1;
    }
    found
};

/// Class id of every 3-node mask, or `u8::MAX` when not weakly connected.
const TRIAD_CLASS: [u8; 64] = {
    let mut table = [u8::MAX; 64];
    let mut mask = 0u8;
    while mask < 64 {
        if weakly_connected_triad(mask) {
            let canon = canonical_triad(mask);
            let mut i = 0;
            while i < 13 {
                if TRIAD_CANONICALS[i] == canon {
                    table[mask as usize] = i as u8 + 2;
                }
                i += 1;
            }
        }
        mask += 1;
    }
    table
};

/// Conventional triad-census (M-A-N) names in catalog order.
const TRIAD_NAMES: [&str; 13] =
    ["021D", "021C", "021U", "111U", "030T", "111D", "030C", "120U", "201", "120C", "120D", "210", "300"];

/// Identifier of a motif class, `0..15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotifId(u8);

impl MotifId {
    pub const SINGLE_ARC: MotifId = MotifId(0);
    pub const RECIPROCAL: MotifId = MotifId(1);

    pub fn new(id: usize) -> Option<Self> {
        (id < MOTIF_CLASSES).then_some(MotifId(id as u8))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn all() -> impl Iterator<Item = MotifId> {
        (0..MOTIF_CLASSES as u8).map(MotifId)
    }

    /// 2 or 3.
    pub fn node_count(self) -> usize {
        if self.0 < 2 {
            2
        } else {
            3
        }
    }

    /// Canonical arcs on nodes `0..node_count`, sorted.
    pub fn canonical_edges(self) -> Vec<(u8, u8)> {
        match self.0 {
            0 => alloc::vec![(0, 1)],
            1 => alloc::vec![(0, 1), (1, 0)],
            id => {
                let mask = TRIAD_CANONICALS[usize::from(id) - 2];
                (0..6).filter(|k| mask & (1 << k) != 0).map(|k| TRIAD_ARCS[k]).collect()
            }
        }
    }

    /// Short name: `dyad`/`mutual` for the two-node classes, the M-A-N
    /// triad code otherwise.
    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "dyad",
            1 => "mutual",
            id => TRIAD_NAMES[usize::from(id) - 2],
        }
    }

    /// Canonical arc set as text, e.g. `0>1,1>0`.
    pub fn edge_label(self) -> String {
        let mut out = String::new();
        for (i, (a, b)) in self.canonical_edges().into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push(char::from(b'0' + a));
            out.push('>');
            out.push(char::from(b'0' + b));
        }
        out
    }
}

/// Classifies a loop-free, weakly connected digraph on two or three distinct
/// node labels.
pub fn canonical_class<T: Copy + Ord + fmt::Debug>(edges: &[(T, T)]) -> Result<MotifId> {
    let mut nodes: Vec<T> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    if edges.iter().any(|(a, b)| a == b) {
        return Err(Error::NotAMotif(alloc::format!("self-loop in {edges:?}")));
    }
    let position = |x: T| nodes.binary_search(&x).expect("collected above") as u8;
    match nodes.len() {
        2 => {
            let mut mask = 0u8;
            for &(a, _) in edges {
                mask |= 1 << position(a);
            }
            Ok(if mask == 0b11 { MotifId::RECIPROCAL } else { MotifId::SINGLE_ARC })
        }
        3 => {
            let mask = edges.iter().fold(0u8, |m, &(a, b)| m | 1 << arc_bit(position(a), position(b)));
            match TRIAD_CLASS[usize::from(mask)] {
                u8::MAX => Err(Error::NotAMotif(alloc::format!("disconnected digraph {edges:?}"))),
                id => Ok(MotifId(id)),
            }
        }
        n => Err(Error::NotAMotif(alloc::format!("{n} nodes"))),
    }
}

/// How arcs are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyKind {
    /// Every occurrence counts 1; no pruning.
    Unweighted,
    /// Prune, then count occurrences.
    SimplifiedUnweighted,
    /// Prune, then add the sum of the occurrence's arc probabilities.
    SimplifiedWeighted,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] =
        [StrategyKind::Unweighted, StrategyKind::SimplifiedUnweighted, StrategyKind::SimplifiedWeighted];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Unweighted => "unweighted",
            StrategyKind::SimplifiedUnweighted => "simplified-unweighted",
            StrategyKind::SimplifiedWeighted => "simplified-weighted",
        }
    }

    pub fn is_simplified(self) -> bool {
        self != StrategyKind::Unweighted
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown strategy `{s}`")))
    }
}

/// A counting strategy with its pruning threshold (0 for unweighted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub threshold: f64,
}

impl Strategy {
    pub fn unweighted() -> Self {
        Self { kind: StrategyKind::Unweighted, threshold: 0.0 }
    }

    pub fn simplified_unweighted(threshold: f64) -> Self {
        Self { kind: StrategyKind::SimplifiedUnweighted, threshold }
    }

    pub fn simplified_weighted(threshold: f64) -> Self {
        Self { kind: StrategyKind::SimplifiedWeighted, threshold }
    }
}

/// Motif features of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub doc_id: String,
    pub strategy: Strategy,
    pub values: [f64; MOTIF_CLASSES],
}

/// Counts induced 2- and 3-node motifs of `chain`, ignoring self-loops.
pub fn census(doc_id: &str, chain: &MarkovChain, strategy: Strategy) -> Result<FeatureVector> {
    if chain.states() == 0 {
        return Err(Error::EmptyChain(0));
    }
    let pruned;
    let (chain, weighted) = match strategy.kind {
        StrategyKind::Unweighted => (chain, false),
        kind => {
            pruned = chain.prune(strategy.threshold)?;
            (&pruned, kind == StrategyKind::SimplifiedWeighted)
        }
    };
    let c = chain.states();
    let arc = |a: usize, b: usize| if a != b && chain.prob(a, b) > 0.0 { Some(chain.prob(a, b)) } else { None };
    let credit = |weights: &[Option<f64>]| -> f64 {
        if weighted {
            weights.iter().flatten().sum()
        } else {
            1.0
        }
    };

    let mut values = [0.0; MOTIF_CLASSES];
    for a in 0..c {
        for b in a + 1..c {
            let ab = [arc(a, b), arc(b, a)];
            match (ab[0].is_some(), ab[1].is_some()) {
                (false, false) => {}
                (true, true) => values[MotifId::RECIPROCAL.index()] += credit(&ab),
                _ => values[MotifId::SINGLE_ARC.index()] += credit(&ab),
            }
            for d in b + 1..c {
                let nodes = [a, b, d];
                let arcs: [Option<f64>; 6] =
                    core::array::from_fn(|k| arc(nodes[TRIAD_ARCS[k].0 as usize], nodes[TRIAD_ARCS[k].1 as usize]));
                let mask = arcs.iter().enumerate().fold(0u8, |m, (k, w)| if w.is_some() { m | 1 << k } else { m });
                let id = TRIAD_CLASS[usize::from(mask)];
                if id != u8::MAX {
                    values[usize::from(id)] += credit(&arcs);
                }
            }
        }
    }
    Ok(FeatureVector { doc_id: doc_id.into(), strategy, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semflow::{build_markov, CommunitySequence, Transition};
    use alloc::vec;

    fn chain_from(states: usize, arcs: &[(usize, usize, f64)]) -> MarkovChain {
        MarkovChain::from_entries(states, arcs.iter().map(|&(from, to, prob)| Transition { from, to, count: 1, prob }))
            .unwrap()
    }

    #[test]
    fn catalog_has_fifteen_distinct_classes() {
        let labels: Vec<String> = MotifId::all().map(MotifId::edge_label).collect();
        let mut dedup = labels.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), MOTIF_CLASSES);
        assert_eq!(MotifId::new(15), None);
        assert_eq!(MotifId::new(0).unwrap().node_count(), 2);
        assert_eq!(MotifId::new(2).unwrap().node_count(), 3);
    }

    #[test]
    fn triad_names_match_dyad_counts() {
        for id in MotifId::all().skip(2) {
            let edges = id.canonical_edges();
            let has = |a, b| edges.contains(&(a, b));
            let mut mutual = 0;
            let mut asym = 0;
            let mut null = 0;
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                match (has(a, b), has(b, a)) {
                    (true, true) => mutual += 1,
                    (false, false) => null += 1,
                    _ => asym += 1,
                }
            }
            let code = alloc::format!("{mutual}{asym}{null}");
            assert!(id.name().starts_with(&code), "{} vs {code}", id.name());
        }
    }

    #[test]
    fn canonical_class_examples() {
        assert_eq!(canonical_class(&[('A', 'B'), ('B', 'A')]).unwrap(), MotifId::RECIPROCAL);
        assert_eq!(canonical_class(&[('B', 'A')]).unwrap(), MotifId::SINGLE_ARC);
        let cycle = canonical_class(&[('A', 'B'), ('B', 'C'), ('C', 'A')]).unwrap();
        assert_eq!(cycle.name(), "030C");
        assert_eq!(canonical_class(&[('B', 'C'), ('C', 'A'), ('A', 'B')]).unwrap(), cycle);
        let out_star = canonical_class(&[('A', 'B'), ('A', 'C')]).unwrap();
        let in_star = canonical_class(&[('B', 'A'), ('C', 'A')]).unwrap();
        assert_ne!(out_star, in_star);
        assert_eq!(out_star.name(), "021D");
        assert_eq!(in_star.name(), "021U");
        assert_eq!(out_star.canonical_edges(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn canonical_class_rejects_non_motifs() {
        assert!(canonical_class::<u8>(&[(0, 0)]).is_err());
        assert!(canonical_class(&[(0, 1), (2, 3)]).is_err());
        assert!(canonical_class(&[(0, 1), (1, 2), (2, 3)]).is_err());
        assert!(canonical_class::<u8>(&[]).is_err());
    }

    #[test]
    fn abcb_census() {
        let seq = CommunitySequence::new("d", vec![0, 1, 2, 1], 3).unwrap();
        let chain = build_markov(&seq).unwrap();
        let f = census("d", &chain, Strategy::unweighted()).unwrap();
        assert_eq!(f.values[MotifId::SINGLE_ARC.index()], 1.0);
        assert_eq!(f.values[MotifId::RECIPROCAL.index()], 1.0);
        let triad = canonical_class(&[(0, 1), (1, 2), (2, 1)]).unwrap();
        assert_eq!(triad.name(), "111D");
        assert_eq!(f.values[triad.index()], 1.0);
        assert_eq!(f.values.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn weighted_cycle() {
        let chain = chain_from(3, &[(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5), (0, 0, 0.5), (1, 1, 0.5), (2, 2, 0.5)]);
        let f = census("d", &chain, Strategy::simplified_weighted(0.1)).unwrap();
        let cycle = canonical_class(&[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(f.values[cycle.index()], 1.5);
        assert_eq!(f.values[MotifId::SINGLE_ARC.index()], 1.5);
    }

    #[test]
    fn zero_threshold_matches_unweighted() {
        let seq = CommunitySequence::new("d", vec![0, 1, 2, 3, 1, 0, 2, 2, 3, 0, 1], 4).unwrap();
        let chain = build_markov(&seq).unwrap();
        let u = census("d", &chain, Strategy::unweighted()).unwrap();
        let s = census("d", &chain, Strategy::simplified_unweighted(0.0)).unwrap();
        assert_eq!(u.values, s.values);
    }

    #[test]
    fn pruning_removes_weak_arcs() {
        let chain = chain_from(3, &[(0, 1, 0.9), (0, 2, 0.1), (1, 2, 1.0), (2, 0, 1.0)]);
        let f = census("d", &chain, Strategy::simplified_unweighted(0.2)).unwrap();
        // Surviving arcs 0>1, 1>2, 2>0: one cycle and three single arcs.
        assert_eq!(f.values[MotifId::SINGLE_ARC.index()], 3.0);
        assert_eq!(f.values[canonical_class(&[(0, 1), (1, 2), (2, 0)]).unwrap().index()], 1.0);
        assert!(census("d", &chain, Strategy::simplified_unweighted(2.0)).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("weighted".parse::<StrategyKind>().is_err());
    }
}
