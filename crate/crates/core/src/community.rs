//! Modularity and Louvain community detection on the binary view of a
//! similarity graph.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::simnet::SimilarityGraph;
use crate::{Error, Result};

/// A simple undirected graph with unit edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: usize,
}

impl Graph {
    /// Builds a graph from undirected pairs. Duplicate pairs collapse;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(nodes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); nodes];
        for (a, b) in pairs {
            if a == b || a >= nodes || b >= nodes {
                return Err(Error::InvalidArgument(alloc::format!("bad edge {a}-{b} for {nodes} nodes")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut twice = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok(Self { adjacency, edges: twice / 2 })
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }
}

impl From<&SimilarityGraph> for Graph {
    fn from(g: &SimilarityGraph) -> Self {
        Graph::from_edges(g.nodes(), g.edge_pairs()).expect("similarity graph edges are valid")
    }
}

/// Community assignment with ids `0..C` numbered by first appearance in node
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    communities: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels<L: Copy + Ord>(labels: &[L]) -> Self {
        let mut seen: alloc::collections::BTreeMap<L, usize> = Default::default();
        let labels = labels
            .iter()
            .map(|l| {
                let next = seen.len();
                *seen.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels, communities: seen.len() }
    }

    pub fn singletons(nodes: usize) -> Self {
        Self { labels: (0..nodes).collect(), communities: nodes }
    }

    pub fn whole(nodes: usize) -> Self {
        Self { labels: vec![0; nodes], communities: usize::from(nodes > 0) }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn communities(&self) -> usize {
        self.communities
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels.get(node).copied()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.communities];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Newman modularity `Q = sum_c [e_c/m - (d_c/2m)^2]`.
pub fn modularity(graph: &Graph, partition: &Partition) -> Result<f64> {
    if partition.len() != graph.nodes() {
        return Err(Error::PartitionMismatch(alloc::format!(
            "partition covers {} nodes, graph has {}",
            partition.len(),
            graph.nodes()
        )));
    }
    if graph.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let mut inside = vec![0usize; partition.communities()];
    let mut degree = vec![0usize; partition.communities()];
    for node in 0..graph.nodes() {
        let c = partition.labels[node];
        degree[c] += graph.degree(node);
        inside[c] += graph.neighbors(node).iter().filter(|&&j| partition.labels[j] == c).count();
    }
    let two_m = (2 * graph.edge_count()) as f64;
    Ok(inside.iter().zip(&degree).map(|(&twice_e, &d)| twice_e as f64 / two_m - sq(d as f64 / two_m)).sum())
}

/// Modularity before and after one local-moving sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pass {
    pub level: usize,
    pub before: f64,
    pub after: f64,
    pub moves: usize,
}

/// Output of [`louvain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Louvain {
    pub partition: Partition,
    /// `None` when the graph has no edges.
    pub modularity: Option<f64>,
    pub seed: u64,
    pub levels: usize,
    pub passes: Vec<Pass>,
}

/// The default visiting order of the first level for `seed`.
pub fn visiting_order(nodes: usize, seed: u64) -> Vec<usize> {
    level_order(nodes, seed, 0)
}

fn sq(x: f64) -> f64 {
    x * x
}

fn level_order(nodes: usize, seed: u64, level: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(level);
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    order
}

/// Louvain modularity maximization with resolution 1.
///
/// Each level shuffles its nodes with a generator derived from `seed`.
pub fn louvain(graph: &Graph, seed: u64) -> Louvain {
    louvain_with_order(graph, &visiting_order(graph.nodes(), seed), seed)
}

/// Louvain with an explicit first-level visiting order; deeper levels still
/// derive their order from `seed`.
///
/// Gains are compared in exact integer arithmetic. Ties between candidate
/// communities go to the current community, then to the candidate visited
/// earliest, and aggregated nodes are numbered by visit order. Relabeling the
/// graph and permuting `order` accordingly therefore reproduces the same
/// partition up to relabeling.
pub fn louvain_with_order(graph: &Graph, order: &[usize], seed: u64) -> Louvain {
    let n = graph.nodes();
    assert_eq!(order.len(), n, "visiting order must list every node once");
    let mut level = Level::from_graph(graph);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut passes = Vec::new();
    let mut depth = 0;

    if level.two_m > 0 {
        let mut order = order.to_vec();
        loop {
            let (assignment, moved) = level.local_moving(&order, depth, &mut passes);
            depth += 1;
            if !moved {
                break;
            }
            let (next, renumber) = level.aggregate(&assignment, &order);
            for m in &mut membership {
                *m = renumber[assignment[*m]];
            }
            level = next;
            order = level_order(level.nodes(), seed, depth as u64);
        }
    }

    let partition =
        if level.two_m == 0 && n > 0 { Partition::singletons(n) } else { Partition::from_labels(&membership) };
    let modularity = (graph.edge_count() > 0).then(|| modularity(graph, &partition).expect("sizes match"));
    Louvain { partition, modularity, seed, levels: depth, passes }
}

/// Weighted graph of one Louvain level. `loops[i]` is the adjacency diagonal
/// (twice the internal edge weight of the community that node `i` stands for).
struct Level {
    adjacency: Vec<Vec<(usize, u64)>>,
    loops: Vec<u64>,
    strength: Vec<u64>,
    two_m: u64,
}

impl Level {
    fn from_graph(graph: &Graph) -> Self {
        let adjacency: Vec<Vec<(usize, u64)>> =
            (0..graph.nodes()).map(|i| graph.neighbors(i).iter().map(|&j| (j, 1)).collect()).collect();
        let strength: Vec<u64> = adjacency.iter().map(|l| l.len() as u64).collect();
        let two_m = strength.iter().sum();
        Self { loops: vec![0; adjacency.len()], adjacency, strength, two_m }
    }

    fn nodes(&self) -> usize {
        self.adjacency.len()
    }

    fn modularity(&self, assignment: &[usize]) -> f64 {
        let n = self.nodes();
        let mut inside = vec![0u64; n];
        let mut total = vec![0u64; n];
        for i in 0..n {
            let c = assignment[i];
            total[c] += self.strength[i];
            inside[c] += self.loops[i];
            for &(j, w) in &self.adjacency[i] {
                if assignment[j] == c {
                    inside[c] += w;
                }
            }
        }
        let two_m = self.two_m as f64;
        inside.iter().zip(&total).map(|(&a, &t)| a as f64 / two_m - sq(t as f64 / two_m)).sum()
    }

    /// Repeated sweeps moving single nodes to the neighbouring community with
    /// the largest strictly positive gain.
    fn local_moving(&self, order: &[usize], depth: usize, passes: &mut Vec<Pass>) -> (Vec<usize>, bool) {
        let n = self.nodes();
        let mut rank = vec![0usize; n];
        for (r, &node) in order.iter().enumerate() {
            rank[node] = r;
        }
        let mut community: Vec<usize> = (0..n).collect();
        let mut total: Vec<u64> = self.strength.clone();
        let mut link = vec![0u64; n];
        let mut touched: Vec<usize> = Vec::new();
        let two_m = i128::from(self.two_m);
        let mut any_move = false;

        loop {
            let before = self.modularity(&community);
            let mut moves = 0;
            for &i in order {
                let current = community[i];
                let k_i = i128::from(self.strength[i]);
                for &(j, w) in &self.adjacency[i] {
                    let c = community[j];
                    if link[c] == 0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                total[current] -= self.strength[i];

                // Proportional to the modularity gain of inserting i into c.
                let score = |c: usize| two_m * i128::from(link[c]) - k_i * i128::from(total[c]);
                let mut best = current;
                let mut best_score = score(current);
                for &c in &touched {
                    let s = score(c);
                    if s > best_score || (s == best_score && best != current && rank[c] < rank[best]) {
                        best = c;
                        best_score = s;
                    }
                }

                total[best] += self.strength[i];
                community[i] = best;
                if best != current {
                    moves += 1;
                }
                for c in touched.drain(..) {
                    link[c] = 0;
                }
            }
            let after = self.modularity(&community);
            passes.push(Pass { level: depth, before, after, moves });
            any_move |= moves > 0;
            if moves == 0 {
                return (community, any_move);
            }
        }
    }

    /// Collapses communities into nodes numbered by first appearance in
    /// `order`; returns the new level and the community -> node map.
    fn aggregate(&self, assignment: &[usize], order: &[usize]) -> (Level, Vec<usize>) {
        const UNSET: usize = usize::MAX;
        let mut renumber = vec![UNSET; self.nodes()];
        let mut count = 0;
        for &i in order {
            let c = assignment[i];
            if renumber[c] == UNSET {
                renumber[c] = count;
                count += 1;
            }
        }
        let mut loops = vec![0u64; count];
        let mut strength = vec![0u64; count];
        let mut pairs: Vec<Vec<(usize, u64)>> = vec![Vec::new(); count];
        for i in 0..self.nodes() {
            let ci = renumber[assignment[i]];
            strength[ci] += self.strength[i];
            loops[ci] += self.loops[i];
            for &(j, w) in &self.adjacency[i] {
                let cj = renumber[assignment[j]];
                if ci == cj {
                    loops[ci] += w;
                } else {
                    pairs[ci].push((cj, w));
                }
            }
        }
        let adjacency = pairs
            .into_iter()
            .map(|mut list| {
                list.sort_unstable_by_key(|&(c, _)| c);
                let mut merged: Vec<(usize, u64)> = Vec::with_capacity(list.len());
                for (c, w) in list {
                    match merged.last_mut() {
                        Some((last, acc)) if *last == c => *acc += w,
                        _ => merged.push((c, w)),
                    }
                }
                merged
            })
            .collect();
        (Level { adjacency, loops, strength, two_m: self.two_m }, renumber)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct double loop over `A_ij - k_i k_j / 2m` for same-community pairs.
    fn newman_oracle(graph: &Graph, labels: &[usize]) -> f64 {
        let n = graph.nodes();
        let two_m = (2 * graph.edge_count()) as f64;
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] != labels[j] {
                    continue;
                }
                let a = if graph.neighbors(i).contains(&j) { 1.0 } else { 0.0 };
                q += a - (graph.degree(i) * graph.degree(j)) as f64 / two_m;
            }
        }
        q / two_m
    }

    /// Every set partition of `n` nodes as restricted growth strings.
    fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for label in 0..=max + 1 {
                prefix.push(label);
                rec(prefix, max.max(label), n, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(&mut vec![0], 0, n, &mut out);
        }
        out
    }

    fn best_by_exhaustion(graph: &Graph) -> (f64, Vec<usize>) {
        all_partitions(graph.nodes())
            .into_iter()
            .map(|p| (newman_oracle(graph, &p), p))
            .fold((f64::NEG_INFINITY, Vec::new()), |best, cand| if cand.0 > best.0 + 1e-12 { cand } else { best })
    }

    fn cliques_with_bridge() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    edges.push((base + a, base + b));
                }
            }
        }
        edges.push((3, 4));
        Graph::from_edges(8, edges).unwrap()
    }

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)))).unwrap()
    }

    #[test]
    fn whole_partition_has_zero_modularity() {
        let g = cliques_with_bridge();
        assert!(modularity(&g, &Partition::whole(8)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn single_edge_singletons() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let q = modularity(&g, &Partition::singletons(2)).unwrap();
        assert!((q - newman_oracle(&g, &[0, 1])).abs() < 1e-15);
        assert_eq!(q, -0.5);
    }

    #[test]
    fn two_triangles() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let p = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let q = modularity(&g, &p).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        assert!((q - newman_oracle(&g, p.labels())).abs() < 1e-12);
    }

    #[test]
    fn modularity_errors() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(matches!(modularity(&g, &Partition::singletons(2)), Err(Error::PartitionMismatch(_))));
        let empty = Graph::from_edges(2, []).unwrap();
        assert_eq!(modularity(&empty, &Partition::whole(2)), Err(Error::NoEdges));
    }

    #[test]
    fn two_cliques_are_recovered_and_optimal() {
        let g = cliques_with_bridge();
        let (best_q, best) = best_by_exhaustion(&g);
        assert_eq!(Partition::from_labels(&best).labels(), &[0, 0, 0, 0, 1, 1, 1, 1]);
        for seed in 0..10 {
            let out = louvain(&g, seed);
            assert_eq!(out.partition.labels(), &[0, 0, 0, 0, 1, 1, 1, 1], "seed {seed}");
            assert!((out.modularity.unwrap() - best_q).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_graph_is_one_community() {
        let g = complete(5);
        let (best_q, best) = best_by_exhaustion(&g);
        assert_eq!(Partition::from_labels(&best).communities(), 1);
        assert!(best_q.abs() < 1e-12);
        for seed in 0..5 {
            assert_eq!(louvain(&g, seed).partition.communities(), 1);
        }
    }

    #[test]
    fn single_node_and_edgeless_graphs() {
        let out = louvain(&Graph::from_edges(1, []).unwrap(), 3);
        assert_eq!(out.partition.labels(), &[0]);
        assert_eq!(out.modularity, None);
        let out = louvain(&Graph::from_edges(3, []).unwrap(), 3);
        assert_eq!(out.partition.communities(), 3);
    }

    #[test]
    fn partition_canonicalization() {
        let p = Partition::from_labels(&[7, 3, 7, 9]);
        assert_eq!(p.labels(), &[0, 1, 0, 2]);
        assert_eq!(p.sizes(), vec![2, 1, 1]);
    }

    fn random_graph() -> impl Strategy<Value = Graph> {
        (2usize..13).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 1..3 * n)
                .prop_map(move |pairs| Graph::from_edges(n, pairs.into_iter().filter(|(a, b)| a != b)).unwrap())
        })
    }

    proptest! {
        #[test]
        fn modularity_matches_oracle(g in random_graph(), labels in proptest::collection::vec(0usize..4, 12)) {
            prop_assume!(g.edge_count() > 0);
            let p = Partition::from_labels(&labels[..g.nodes()]);
            let q = modularity(&g, &p).unwrap();
            prop_assert!((q - newman_oracle(&g, p.labels())).abs() < 1e-9);
            prop_assert!((-0.5..1.0).contains(&q));
        }

        #[test]
        fn louvain_passes_never_lose_modularity(g in random_graph(), seed in 0u64..50) {
            prop_assume!(g.edge_count() > 0);
            let out = louvain(&g, seed);
            let q = out.modularity.unwrap();
            prop_assert!(q >= modularity(&g, &Partition::singletons(g.nodes())).unwrap() - 1e-12);
            for pass in &out.passes {
                prop_assert!(pass.after >= pass.before);
            }
            prop_assert!((q - newman_oracle(&g, out.partition.labels())).abs() < 1e-9);
        }

        #[test]
        fn louvain_is_label_invariant(g in random_graph(), seed in 0u64..50, shift in 0usize..12) {
            let n = g.nodes();
            let perm: Vec<usize> = (0..n).map(|i| (i * 5 + shift) % n).collect();
            prop_assume!({ let mut p = perm.clone(); p.sort_unstable(); p == (0..n).collect::<Vec<_>>() });
            let mut relabeled_edges = Vec::new();
            for a in 0..n {
                for &b in g.neighbors(a) {
                    if a < b {
                        relabeled_edges.push((perm[a], perm[b]));
                    }
                }
            }
            let h = Graph::from_edges(n, relabeled_edges).unwrap();
            let order = visiting_order(n, seed);
            let permuted_order: Vec<usize> = order.iter().map(|&v| perm[v]).collect();
            let a = louvain_with_order(&g, &order, seed);
            let b = louvain_with_order(&h, &permuted_order, seed);
            match (a.modularity, b.modularity) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
            let mapped: Vec<usize> = (0..n).map(|v| b.partition.labels()[perm[v]]).collect();
            prop_assert_eq!(Partition::from_labels(&mapped), a.partition);
        }
    }
}
