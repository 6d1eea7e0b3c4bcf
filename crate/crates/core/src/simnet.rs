//! Sentence-similarity networks built by k-nearest-neighbour linking.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::embed::SentenceVector;
use crate::{Error, Result};

impl AsRef<[f64]> for SentenceVector {
    fn as_ref(&self) -> &[f64] {
        &self.vector
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn cosine_with_norms(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    let (nu, nv) = (libm::sqrt(dot(u, u)), libm::sqrt(dot(v, v)));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

/// An undirected edge `a < b` weighted by cosine similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Undirected k-NN similarity graph over sentence vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    nodes: usize,
    k_used: usize,
    edges: Vec<Edge>,
}

impl SimilarityGraph {
    /// Rebuilds a graph from its parts (e.g. a cached edge list). Edges are
    /// sorted; duplicates, self-edges and out-of-range weights are rejected.
    pub fn from_edges(nodes: usize, k_used: usize, mut edges: Vec<Edge>) -> Result<Self> {
        for e in &mut edges {
            if e.a == e.b || e.a >= nodes || e.b >= nodes {
                return Err(Error::InvalidArgument(alloc::format!(
                    "edge {}-{} is invalid for {nodes} nodes",
                    e.a,
                    e.b
                )));
            }
            if !(-1.0..=1.0).contains(&e.weight) {
                return Err(Error::InvalidArgument(alloc::format!("weight {} outside [-1, 1]", e.weight)));
            }
            if e.a > e.b {
                core::mem::swap(&mut e.a, &mut e.b);
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        if edges.windows(2).any(|w| (w[0].a, w[0].b) == (w[1].a, w[1].b)) {
            return Err(Error::InvalidArgument("duplicate edge".into()));
        }
        Ok(Self { nodes, k_used, edges })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn k_used(&self) -> usize {
        self.k_used
    }

    /// Edges sorted by `(a, b)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.a, e.b))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.nodes];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let mut dsu = DisjointSets::new(self.nodes);
        for e in &self.edges {
            dsu.union(e.a, e.b);
        }
        dsu.count
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    count: usize,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), count: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
            self.count -= 1;
        }
    }
}

/// Per-node neighbour rankings: most similar first, ties toward lower index.
struct Rankings {
    lists: Vec<Vec<(usize, f64)>>,
}

impl Rankings {
    fn compute<V: AsRef<[f64]>>(vectors: &[V], norms: &[f64], depth: usize) -> Self {
        let n = vectors.len();
        let lists = (0..n)
            .map(|i| {
                let u = vectors[i].as_ref();
                let mut row: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, cosine_with_norms(u, vectors[j].as_ref(), norms[i], norms[j])))
                    .collect();
                if depth < row.len() {
                    row.select_nth_unstable_by(depth, rank_order);
                    row.truncate(depth);
                }
                row.sort_unstable_by(rank_order);
                row
            })
            .collect();
        Self { lists }
    }

    fn graph(&self, k: usize) -> SimilarityGraph {
        let mut edges: Vec<Edge> = self
            .lists
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list[..k].iter().map(move |&(j, w)| Edge { a: i.min(j), b: i.max(j), weight: w }))
            .collect();
        edges.sort_by_key(|e| (e.a, e.b));
        edges.dedup_by_key(|e| (e.a, e.b));
        SimilarityGraph { nodes: self.lists.len(), k_used: k, edges }
    }
}

fn rank_order(x: &(usize, f64), y: &(usize, f64)) -> Ordering {
    y.1.total_cmp(&x.1).then(x.0.cmp(&y.0))
}

fn validated_norms<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    vectors
        .iter()
        .map(|v| {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            let norm = libm::sqrt(dot(v, v));
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::ZeroNorm);
            }
            Ok(norm)
        })
        .collect()
}

/// Links every node to its `k` most similar nodes and symmetrizes by union.
pub fn knn_graph<V: AsRef<[f64]>>(vectors: &[V], k: usize) -> Result<SimilarityGraph> {
    let n = vectors.len();
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidK { k, nodes: n });
    }
    let norms = validated_norms(vectors)?;
    Ok(Rankings::compute(vectors, &norms, k).graph(k))
}

/// The k-NN graph for the smallest `k` that makes it connected.
///
/// The edge set grows monotonically with `k`, so connectivity is tracked
/// incrementally by adding each node's k-th choice to a union-find.
pub fn min_k_connected<V: AsRef<[f64]>>(vectors: &[V]) -> Result<SimilarityGraph> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidK { k: 1, nodes: n });
    }
    let norms = validated_norms(vectors)?;
    let mut dsu = DisjointSets::new(n);
    let mut depth = 8.min(n - 1);
    let mut k = 0;
    loop {
        let rankings = Rankings::compute(vectors, &norms, depth);
        while k < depth {
            for (i, list) in rankings.lists.iter().enumerate() {
                dsu.union(i, list[k].0);
            }
            k += 1;
            if dsu.count == 1 {
                return Ok(rankings.graph(k));
            }
        }
        depth = (depth * 2).min(n - 1);
    }
}
