//! Text formats for stage artifacts.
//!
//! Every writer takes a [`Floats`] style: [`Floats::Export`] rounds to nine
//! significant digits for human-facing exports, [`Floats::Exact`] writes the
//! shortest representation that parses back to the same `f64` and is used for
//! cached artifacts.

use std::fmt::Write as _;
use std::path::Path;

use semflow_core::community::Partition;
use semflow_core::corpus::Sentence;
use semflow_core::embed::SentenceVector;
use semflow_core::motifs::{FeatureVector, MotifId, Strategy, StrategyKind, MOTIF_CLASSES};
use semflow_core::semflow::{MarkovChain, Transition};
use semflow_core::simnet::{Edge, SimilarityGraph};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Floats {
    Export,
    Exact,
}

impl Floats {
    pub fn fmt(self, x: f64) -> String {
        match self {
            Floats::Export => sig9(x),
            Floats::Exact => format!("{x}"),
        }
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits; plain notation for exponents in `-5..9`,
/// scientific otherwise. Trailing zeros are dropped.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

/// `x` rounded to nine significant digits.
pub fn round9(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}

fn bad(what: &str, line: usize, detail: impl std::fmt::Display) -> Error {
    Error::Artifact(format!("{what} line {line}: {detail}"))
}

fn field<T: std::str::FromStr>(what: &str, line: usize, s: Option<&str>) -> Result<T> {
    let s = s.ok_or_else(|| bad(what, line, "missing field"))?;
    s.parse().map_err(|_| bad(what, line, format!("cannot parse `{s}`")))
}

/// Writes `contents` to `path`, creating parent directories. The file is
/// written beside its target and renamed into place.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `index\tstart\tend\ttokens` per sentence, spans in bytes.
pub fn write_sentences(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        writeln!(out, "{}\t{}\t{}\t{}", s.index, s.span.start, s.span.end, s.tokens.join(" ")).unwrap();
    }
    out
}

pub fn read_sentences(doc_id: &str, text: &str) -> Result<Vec<Sentence>> {
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            let mut f = line.split('\t');
            let index = field("sentences", n + 1, f.next())?;
            let start = field("sentences", n + 1, f.next())?;
            let end = field("sentences", n + 1, f.next())?;
            let tokens = f.next().unwrap_or("").split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
            Ok(Sentence { doc_id: doc_id.to_owned(), index, span: start..end, tokens })
        })
        .collect()
}

/// `index\tsource_index\tomega\tv1 ... vd` per sentence vector.
pub fn write_vectors(vectors: &[SentenceVector], floats: Floats) -> String {
    let mut out = String::new();
    for v in vectors {
        let values: Vec<String> = v.vector.iter().map(|&x| floats.fmt(x)).collect();
        writeln!(out, "{}\t{}\t{}\t{}", v.index, v.source_index, v.omega, values.join(" ")).unwrap();
    }
    out
}

pub fn read_vectors(doc_id: &str, text: &str) -> Result<Vec<SentenceVector>> {
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            let mut f = line.split('\t');
            let index = field("vectors", n + 1, f.next())?;
            let source_index = field("vectors", n + 1, f.next())?;
            let omega = field("vectors", n + 1, f.next())?;
            let vector = f
                .next()
                .unwrap_or("")
                .split(' ')
                .map(|x| field("vectors", n + 1, Some(x)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(SentenceVector { doc_id: doc_id.to_owned(), index, source_index, vector, omega })
        })
        .collect()
}

/// Header `S k_used`, then `i j weight` per undirected edge.
pub fn write_graph(graph: &SimilarityGraph, floats: Floats) -> String {
    let mut out = format!("{} {}\n", graph.nodes(), graph.k_used());
    for e in graph.edges() {
        writeln!(out, "{} {} {}", e.a, e.b, floats.fmt(e.weight)).unwrap();
    }
    out
}

pub fn read_graph(text: &str) -> Result<SimilarityGraph> {
    let mut lines = text.lines();
    let mut header = lines.next().unwrap_or("").split(' ');
    let nodes = field("graph", 1, header.next())?;
    let k_used = field("graph", 1, header.next())?;
    let edges = lines
        .enumerate()
        .map(|(n, line)| {
            let mut f = line.split(' ');
            Ok(Edge {
                a: field("graph", n + 2, f.next())?,
                b: field("graph", n + 2, f.next())?,
                weight: field("graph", n + 2, f.next())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilarityGraph::from_edges(nodes, k_used, edges)?)
}

/// A partition together with how it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionRecord {
    pub seed: u64,
    pub modularity: Option<f64>,
    pub partition: Partition,
}

/// Header `seed=<seed> Q=<modularity> C=<communities>`, then
/// `node community` per node.
pub fn write_partition(record: &PartitionRecord, floats: Floats) -> String {
    let q = record.modularity.map_or_else(|| "-".to_owned(), |q| floats.fmt(q));
    let mut out = format!("seed={} Q={q} C={}\n", record.seed, record.partition.communities());
    for (node, label) in record.partition.labels().iter().enumerate() {
        writeln!(out, "{node} {label}").unwrap();
    }
    out
}

pub fn read_partition(text: &str) -> Result<PartitionRecord> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let mut seed = None;
    let mut modularity = None;
    let mut communities: Option<usize> = None;
    for item in header.split(' ') {
        match item.split_once('=') {
            Some(("seed", v)) => seed = Some(field("partition", 1, Some(v))?),
            Some(("Q", "-")) => {}
            Some(("Q", v)) => modularity = Some(field("partition", 1, Some(v))?),
            Some(("C", v)) => communities = Some(field("partition", 1, Some(v))?),
            _ => return Err(bad("partition", 1, format!("unexpected header item `{item}`"))),
        }
    }
    let labels = lines
        .enumerate()
        .map(|(n, line)| {
            let mut f = line.split(' ');
            let node: usize = field("partition", n + 2, f.next())?;
            if node != n {
                return Err(bad("partition", n + 2, "nodes out of order"));
            }
            field("partition", n + 2, f.next())
        })
        .collect::<Result<Vec<usize>>>()?;
    let partition = Partition::from_labels(&labels);
    if communities != Some(partition.communities()) || partition.labels() != labels.as_slice() {
        return Err(bad("partition", 1, "labels are not canonical or C disagrees"));
    }
    let seed = seed.ok_or_else(|| bad("partition", 1, "missing seed"))?;
    Ok(PartitionRecord { seed, modularity, partition })
}

/// Header `C num_transitions`, then `a b count prob` per non-zero entry.
pub fn write_chain(chain: &MarkovChain, floats: Floats) -> String {
    let mut out = format!("{} {}\n", chain.states(), chain.total_transitions());
    for t in chain.transitions() {
        writeln!(out, "{} {} {} {}", t.from, t.to, t.count, floats.fmt(t.prob)).unwrap();
    }
    out
}

pub fn read_chain(text: &str) -> Result<MarkovChain> {
    let mut lines = text.lines();
    let mut header = lines.next().unwrap_or("").split(' ');
    let states = field("chain", 1, header.next())?;
    let total: u64 = field("chain", 1, header.next())?;
    let entries = lines
        .enumerate()
        .map(|(n, line)| {
            let mut f = line.split(' ');
            Ok(Transition {
                from: field("chain", n + 2, f.next())?,
                to: field("chain", n + 2, f.next())?,
                count: field("chain", n + 2, f.next())?,
                prob: field("chain", n + 2, f.next())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chain = MarkovChain::from_entries(states, entries)?;
    if chain.total_transitions() != total {
        return Err(bad("chain", 1, "transition total disagrees with entries"));
    }
    Ok(chain)
}

/// Column names for the 15 motif classes, by canonical edge set.
pub fn feature_columns() -> Vec<String> {
    MotifId::all().map(MotifId::edge_label).collect()
}

/// A feature vector with the class it is classified under.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub label: Option<String>,
    pub features: FeatureVector,
}

/// Tab-separated matrix with a header row; one row per (doc, strategy,
/// threshold). A missing label is written as `-`.
pub fn write_features(rows: &[FeatureRow], floats: Floats) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Export("empty feature matrix".into()));
    }
    let mut out = String::from("doc_id\tlabel\tstrategy\tthreshold");
    for name in feature_columns() {
        out.push('\t');
        out.push_str(&name);
    }
    out.push('\n');
    for row in rows {
        let f = &row.features;
        write!(
            out,
            "{}\t{}\t{}\t{}",
            f.doc_id,
            row.label.as_deref().unwrap_or("-"),
            f.strategy.kind,
            floats.fmt(f.strategy.threshold)
        )
        .unwrap();
        for &v in &f.values {
            out.push('\t');
            out.push_str(&floats.fmt(v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_features(text: &str) -> Result<Vec<FeatureRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("features", 1, "missing header"))?;
    if header.split('\t').skip(4).map(str::to_owned).collect::<Vec<_>>() != feature_columns() {
        return Err(bad("features", 1, "unexpected columns"));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let line_no = n + 2;
            let mut f = line.split('\t');
            let doc_id: String = field("features", line_no, f.next())?;
            let label: String = field("features", line_no, f.next())?;
            let kind: StrategyKind = field("features", line_no, f.next())?;
            let threshold = field("features", line_no, f.next())?;
            let mut values = [0.0; MOTIF_CLASSES];
            for v in values.iter_mut() {
                *v = field("features", line_no, f.next())?;
            }
            Ok(FeatureRow {
                label: (label != "-").then_some(label),
                features: FeatureVector { doc_id, strategy: Strategy { kind, threshold }, values },
            })
        })
        .collect()
}
